//! Exact arithmetic helpers: binomials, the weight parameter, and lossless
//! conversion of big rationals to floating point.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `C(n, k)` for `n >= -1`, with `C(-1, 0) = 1` and `C(-1, k) = 0` for
/// `k >= 1`. Multiplicative formula, exact.
pub fn binomial(n: i64, k: u64) -> BigUint {
    if n < 0 {
        debug_assert_eq!(n, -1, "binomial only defined here for n >= -1");
        return if k == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    let n = n as u64;
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// The cycle weight `θ > 0`, kept as an exact rational in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Theta(BigRational);

impl Theta {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if numer == 0 || denom == 0 {
            return Err(Error::InvalidTheta(format!("{numer}/{denom}")));
        }
        Ok(Theta(BigRational::new(numer.into(), denom.into())))
    }

    pub fn from_rational(r: BigRational) -> Result<Self> {
        if !r.is_positive() {
            return Err(Error::InvalidTheta(format_rational(&r)));
        }
        Ok(Theta(r))
    }

    pub fn one() -> Self {
        Theta(BigRational::one())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> BigUint {
        self.0.numer().magnitude().clone()
    }

    pub fn denom(&self) -> BigUint {
        self.0.denom().magnitude().clone()
    }

    pub fn pow(&self, k: usize) -> BigRational {
        Pow::pow(&self.0, k)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.0)
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theta::from_rational(parse_rational(s)?)
    }
}

impl Serialize for Theta {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Theta {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `p/q` or an integer `p`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("rational {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Always `num/den`, including integers (`2/1`).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn ratio(numer: &BigUint, denom: &BigUint) -> BigRational {
    BigRational::new(
        BigInt::from_biguint(Sign::Plus, numer.clone()),
        BigInt::from_biguint(Sign::Plus, denom.clone()),
    )
}

/// Correctly-scaled `numer / denom` as `f64`, for operands far outside the
/// `f64` range.
pub fn biguint_ratio_to_f64(numer: &BigUint, denom: &BigUint) -> f64 {
    if numer.is_zero() {
        return 0.0;
    }
    // Shift so the integer quotient carries 64 significant bits.
    let shift = numer.bits() as i64 - denom.bits() as i64 - 64;
    let (n, d) = if shift > 0 {
        (numer.clone(), denom << shift as u64)
    } else {
        (numer << (-shift) as u64, denom.clone())
    };
    let q = n / d;
    ldexp(q.to_f64().unwrap_or(f64::INFINITY), shift)
}

fn ldexp(mut x: f64, mut exp: i64) -> f64 {
    let step = 2f64.powi(900);
    while exp > 900 {
        x *= step;
        exp -= 900;
    }
    while exp < -900 {
        x /= step;
        exp += 900;
    }
    x * 2f64.powi(exp as i32)
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let v = biguint_ratio_to_f64(r.numer().magnitude(), r.denom().magnitude());
    if r.is_negative() {
        -v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial(3, 4), BigUint::zero());
        assert_eq!(binomial(-1, 0), BigUint::one());
        assert_eq!(binomial(-1, 1), BigUint::zero());
        assert_eq!(binomial(-1, 5), BigUint::zero());
        assert_eq!(binomial(60, 30), BigUint::from(118264581564861424u64));
    }

    #[test]
    fn binomial_matches_pascal() {
        let mut row = vec![BigUint::one()];
        for n in 1..40i64 {
            let mut next = vec![BigUint::one(); n as usize + 1];
            for k in 1..n as usize {
                next[k] = &row[k - 1] + &row[k];
            }
            row = next;
            for (k, v) in row.iter().enumerate() {
                assert_eq!(&binomial(n, k as u64), v);
            }
        }
    }

    #[test]
    fn theta_parsing() {
        assert_eq!("1/2".parse::<Theta>().unwrap(), Theta::new(1, 2).unwrap());
        assert_eq!("4/2".parse::<Theta>().unwrap().to_string(), "2");
        assert_eq!("7/3".parse::<Theta>().unwrap().to_string(), "7/3");
        assert!("0".parse::<Theta>().is_err());
        assert!("-1/2".parse::<Theta>().is_err());
        assert!("1/0".parse::<Theta>().is_err());
        assert!(Theta::new(0, 1).is_err());
    }

    #[test]
    fn huge_ratio_to_float() {
        let big = BigUint::one() << 5000u32;
        let v = biguint_ratio_to_f64(&(&big * 3u32), &(&big * 4u32));
        assert_eq!(v, 0.75);
        let v = biguint_ratio_to_f64(&BigUint::one(), &(BigUint::from(3u32)));
        assert!((v - 1.0 / 3.0).abs() < 1e-16);
        let v = biguint_ratio_to_f64(&(BigUint::one() << 1100u32), &(BigUint::one() << 1000u32));
        assert_eq!(v, 2f64.powi(100));
    }
}
