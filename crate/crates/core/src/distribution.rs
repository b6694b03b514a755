//! Exact law of the cycle count.
//!
//! At step `t` the number `X_t` of new singleton cycles has mass
//! proportional to `θ^k C(N_{t-1} - 1 + n_t - k, n_t - k)`, the steps are
//! independent, and `K_t = X_1 + ... + X_t`. Everything here is exact
//! rational arithmetic except the explicitly floating diagnostics at the
//! bottom (Lyapunov ratio, Poisson distance, large-horizon moment sums).

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perm::Profile;
use crate::rational::{
    biguint_ratio_to_f64, binomial, format_rational, ratio, rational_to_f64, Theta,
};

fn check_step(t: usize, profile: &Profile) -> Result<()> {
    if t == 0 || t > profile.len() {
        return Err(Error::StepOutOfRange {
            step: t,
            len: profile.len(),
        });
    }
    Ok(())
}

/// Integer masses `C(prev_total - 1 + n - k, n - k) p^k q^(n - k)` for
/// `k = 0..=n`, where `θ = p/q`. Proportional to the step law.
pub fn raw_step_weights(prev_total: usize, n: usize, theta: &Theta) -> Vec<BigUint> {
    // C(a + m, m) for m = 0..=n with a = prev_total - 1 >= -1, by the ratio
    // C(a + m, m) = C(a + m - 1, m - 1) (a + m) / m. The a = -1 case zeroes
    // out at m = 1 as required.
    let a = prev_total as i64 - 1;
    let mut by_m = Vec::with_capacity(n + 1);
    let mut c = BigUint::one();
    by_m.push(c.clone());
    for m in 1..=n as i64 {
        c *= (a + m) as u64;
        c /= m as u64;
        by_m.push(c.clone());
    }
    if theta.is_one() {
        by_m.reverse();
        return by_m;
    }
    let p = theta.numer();
    let q = theta.denom();
    let mut q_pows = Vec::with_capacity(n + 1);
    let mut acc = BigUint::one();
    for _ in 0..=n {
        q_pows.push(acc.clone());
        acc *= &q;
    }
    let mut p_pow = BigUint::one();
    (0..=n)
        .map(|k| {
            let w = &by_m[n - k] * &p_pow * &q_pows[n - k];
            p_pow *= &p;
            w
        })
        .collect()
}

/// Integer masses proportional to the law of `X_t`.
pub fn step_weights(t: usize, profile: &Profile, theta: &Theta) -> Result<Vec<BigUint>> {
    check_step(t, profile)?;
    Ok(raw_step_weights(
        profile.prefix_total(t - 1),
        profile.multiplicity(t),
        theta,
    ))
}

/// Total step weight `F_t(θ) = Σ_k C(N_{t-1} - 1 + n_t - k, n_t - k) θ^k`.
pub fn step_normalizer(t: usize, profile: &Profile, theta: &Theta) -> Result<BigRational> {
    let weights = step_weights(t, profile, theta)?;
    let total: BigUint = weights.iter().sum();
    let q_pow = num_traits::pow(theta.denom(), profile.multiplicity(t));
    Ok(ratio(&total, &q_pow))
}

/// `S = Σ_π θ^{|π|} = Π_s F_s(θ)`.
pub fn normalizer(profile: &Profile, theta: &Theta) -> BigRational {
    (1..=profile.len())
        .map(|t| step_normalizer(t, profile, theta).expect("step in range"))
        .fold(BigRational::one(), |acc, f| acc * f)
}

/// Law of the number of new cycles opened at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepLaw {
    masses: Vec<BigRational>,
}

impl StepLaw {
    pub fn from_weights(weights: &[BigUint]) -> Self {
        let total: BigUint = weights.iter().sum();
        StepLaw {
            masses: weights.iter().map(|w| ratio(w, &total)).collect(),
        }
    }

    /// `P(X_t = k)` for `k = 0..=n_t`.
    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    pub fn mass(&self, k: usize) -> BigRational {
        self.masses
            .get(k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn moments(&self) -> CentralMoments {
        CentralMoments::from_pmf(0, &self.masses)
    }
}

pub fn step_law(t: usize, profile: &Profile, theta: &Theta) -> Result<StepLaw> {
    Ok(StepLaw::from_weights(&step_weights(t, profile, theta)?))
}

/// Uniform-weight closed form `C(n_t, k) / C(N_t, k) · (N_t - n_t) / (N_t - k)`.
/// The `0/0` arising at the first nonempty step (`N_{t-1} = 0`, `k = n_t`)
/// is read as 1.
pub fn uniform_step_mass(t: usize, profile: &Profile, k: usize) -> Result<BigRational> {
    check_step(t, profile)?;
    let n = profile.multiplicity(t);
    let total = profile.prefix_total(t);
    if k > n {
        return Ok(BigRational::zero());
    }
    let head = ratio(
        &binomial(n as i64, k as u64),
        &binomial(total as i64, k as u64),
    );
    let tail = degenerate_ratio((total - n) as u64, (total - k) as u64);
    Ok(head * tail)
}

/// `num / den` with `0/0 := 1`.
fn degenerate_ratio(num: u64, den: u64) -> BigRational {
    if den == 0 {
        debug_assert_eq!(num, 0);
        BigRational::one()
    } else {
        BigRational::new(num.into(), den.into())
    }
}

/// Negative hypergeometric law: draw without replacement from `total`
/// balls of which `successes` are successes; `Y` is the draw on which the
/// `rank`-th success appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NhgParams {
    pub total: u64,
    pub successes: u64,
    pub rank: u64,
}

impl NhgParams {
    pub fn new(total: u64, successes: u64, rank: u64) -> Self {
        NhgParams {
            total,
            successes,
            rank,
        }
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.successes <= self.total && self.rank >= 1 && self.rank <= self.successes + 1
    }

    /// `rank..=total - successes + rank`. When `rank = successes + 1` the
    /// rank-th success never arrives and all mass sits at `total + 1`.
    pub fn support(&self) -> RangeInclusive<u64> {
        self.rank..=self.total - self.successes + self.rank
    }

    /// `C(M, r-1) C(N-M, κ-r) / C(N, κ-1) · (M-r+1)/(N-κ+1)`, zero off the
    /// support, with `0/0 := 1` at `κ = N + 1`.
    pub fn pmf(&self, kappa: u64) -> BigRational {
        if !self.is_nondegenerate() || !self.support().contains(&kappa) {
            return BigRational::zero();
        }
        let (n, m, r) = (self.total, self.successes, self.rank);
        let head = ratio(
            &(binomial(m as i64, r - 1) * binomial((n - m) as i64, kappa - r)),
            &binomial(n as i64, kappa - 1),
        );
        head * degenerate_ratio(m + 1 - r, n + 1 - kappa)
    }

    /// Closed-form mean, variance and third central moment.
    pub fn moments(&self) -> CentralMoments {
        let q = |x: i64| BigRational::from_integer(x.into());
        let (n, m, r) = (self.total as i64, self.successes as i64, self.rank as i64);
        let mean = q(r) * q(n + 1) / q(m + 1);
        let variance = q(r) * q(n - m) * q(n + 1) * q(m + 1 - r) / (q(m + 1) * q(m + 1) * q(m + 2));
        let third = &variance * q(2 * n - m + 1) * q(m + 1 - 2 * r) / (q(m + 1) * q(m + 3));
        CentralMoments {
            mean,
            variance,
            third,
        }
    }
}

/// Mean, variance and third central moment. For sums of independent
/// variables all three add.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CentralMoments {
    pub mean: BigRational,
    pub variance: BigRational,
    pub third: BigRational,
}

impl CentralMoments {
    pub fn zero() -> Self {
        CentralMoments {
            mean: BigRational::zero(),
            variance: BigRational::zero(),
            third: BigRational::zero(),
        }
    }

    /// Moments of the law putting `masses[i]` on `offset + i`.
    pub fn from_pmf(offset: i64, masses: &[BigRational]) -> Self {
        let at = |i: usize| BigRational::from_integer(BigInt::from(offset + i as i64));
        let mean: BigRational = masses.iter().enumerate().map(|(i, p)| at(i) * p).sum();
        let mut variance = BigRational::zero();
        let mut third = BigRational::zero();
        for (i, p) in masses.iter().enumerate() {
            let d = at(i) - &mean;
            let d2 = &d * &d;
            variance += &d2 * p;
            third += d2 * d * p;
        }
        CentralMoments {
            mean,
            variance,
            third,
        }
    }

    pub fn add(&self, other: &CentralMoments) -> CentralMoments {
        CentralMoments {
            mean: &self.mean + &other.mean,
            variance: &self.variance + &other.variance,
            third: &self.third + &other.third,
        }
    }
}

/// Closed-form moments of `X_t` under uniform weighting:
/// `E = n_t/(N_{t-1}+1)`,
/// `Var = n_t (N_t+1) N_{t-1} / ((N_{t-1}+1)^2 (N_{t-1}+2))`,
/// `third = Var (n_t+N_t+1)(N_{t-1}-1) / ((N_{t-1}+1)(N_{t-1}+3))`.
pub fn x_moments(t: usize, profile: &Profile) -> Result<CentralMoments> {
    check_step(t, profile)?;
    let q = |x: i64| BigRational::from_integer(x.into());
    let n = profile.multiplicity(t) as i64;
    let prev = profile.prefix_total(t - 1) as i64;
    let total = profile.prefix_total(t) as i64;
    let mean = q(n) / q(prev + 1);
    let variance = q(n) * q(total + 1) * q(prev) / (q(prev + 1) * q(prev + 1) * q(prev + 2));
    let third = &variance * q(n + total + 1) * q(prev - 1) / (q(prev + 1) * q(prev + 3));
    Ok(CentralMoments {
        mean,
        variance,
        third,
    })
}

/// Moments of `K_t` under uniform weighting: sums of the per-step moments.
pub fn k_moments(profile: &Profile) -> CentralMoments {
    (1..=profile.len()).fold(CentralMoments::zero(), |acc, t| {
        acc.add(&x_moments(t, profile).expect("step in range"))
    })
}

/// Moments of `K_t` for any weight, from the exact step laws.
pub fn k_moments_weighted(profile: &Profile, theta: &Theta) -> CentralMoments {
    (1..=profile.len()).fold(CentralMoments::zero(), |acc, t| {
        acc.add(
            &step_law(t, profile, theta)
                .expect("step in range")
                .moments(),
        )
    })
}

/// Law of the cycle count `K_t`, kept as integer weights over a common total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclePmf {
    profile: Profile,
    theta: Theta,
    support_min: usize,
    weights: Vec<BigUint>,
    total: BigUint,
}

#[derive(Debug, Serialize)]
struct CyclePmfJson<'a> {
    support_min: usize,
    probabilities: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<&'a [usize]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<String>,
}

impl CyclePmf {
    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    /// Smallest cycle count with positive mass.
    pub fn support_min(&self) -> usize {
        self.support_min
    }

    pub fn support_max(&self) -> usize {
        self.support_min + self.weights.len() - 1
    }

    /// `P(K = support_min + i)` for each `i`.
    pub fn probabilities(&self) -> Vec<BigRational> {
        self.weights.iter().map(|w| ratio(w, &self.total)).collect()
    }

    pub fn mass(&self, k: usize) -> BigRational {
        match k
            .checked_sub(self.support_min)
            .and_then(|i| self.weights.get(i))
        {
            Some(w) => ratio(w, &self.total),
            None => BigRational::zero(),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| biguint_ratio_to_f64(w, &self.total))
            .collect()
    }

    pub fn moments(&self) -> CentralMoments {
        CentralMoments::from_pmf(self.support_min as i64, &self.probabilities())
    }

    /// `E(K)` as a float, from the exact weights.
    pub fn mean_f64(&self) -> f64 {
        let first: BigUint = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (self.support_min + i))
            .sum();
        biguint_ratio_to_f64(&first, &self.total)
    }

    /// `{"support_min": .., "probabilities": ["num/den", ..]}`, optionally
    /// tagged with the profile and weight it was computed for.
    pub fn to_json(&self, with_params: bool) -> serde_json::Value {
        let doc = CyclePmfJson {
            support_min: self.support_min,
            probabilities: self.probabilities().iter().map(format_rational).collect(),
            profile: with_params.then(|| self.profile.multiplicities()),
            theta: with_params.then(|| self.theta.to_string()),
        };
        serde_json::to_value(doc).expect("serializable")
    }
}

/// Exact law of `K_t`: coefficients of `Π_s F_s(θz) / F_s(θ)`.
pub fn k_pmf(profile: &Profile, theta: &Theta) -> CyclePmf {
    let factors: Vec<Vec<BigUint>> = (1..=profile.len())
        .map(|t| step_weights(t, profile, theta).expect("step in range"))
        .collect();
    let poly = product_polynomial(&factors);
    let support_min = poly.iter().position(|c| !c.is_zero()).unwrap_or(0);
    let last = poly.iter().rposition(|c| !c.is_zero()).unwrap_or(0);
    let weights = poly[support_min..=last].to_vec();
    let total = weights.iter().sum();
    CyclePmf {
        profile: profile.clone(),
        theta: theta.clone(),
        support_min,
        weights,
        total,
    }
}

fn product_polynomial(factors: &[Vec<BigUint>]) -> Vec<BigUint> {
    factors
        .iter()
        .fold(vec![BigUint::one()], |acc, f| poly_mul(&acc, f))
}

fn poly_mul(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (j, bj) in b.iter().enumerate() {
        if bj.is_zero() {
            continue;
        }
        if bj.is_one() {
            for (i, ai) in a.iter().enumerate() {
                out[i + j] += ai;
            }
        } else if let Some(small) = bj.to_u64() {
            for (i, ai) in a.iter().enumerate() {
                out[i + j] += ai * small;
            }
        } else {
            for (i, ai) in a.iter().enumerate() {
                out[i + j] += ai * bj;
            }
        }
    }
    out
}

/// Float moments of one step from its integer weights; the central sums
/// are formed exactly and rounded once.
pub fn weight_moments_f64(weights: &[BigUint]) -> (f64, f64, f64) {
    let to_int = |u: BigUint| BigInt::from_biguint(Sign::Plus, u);
    let mut s = [
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
        BigInt::zero(),
    ];
    for (k, w) in weights.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let mut term = to_int(w.clone());
        for slot in s.iter_mut() {
            *slot += &term;
            term *= k;
        }
    }
    let [s0, s1, s2, s3] = s;
    let q = |num: BigInt, den: BigInt| rational_to_f64(&BigRational::new(num, den));
    let mean = q(s1.clone(), s0.clone());
    let var = q(&s0 * &s2 - &s1 * &s1, &s0 * &s0);
    let third = q(
        &s0 * &s0 * &s3 - BigInt::from(3) * &s0 * &s1 * &s2 + BigInt::from(2) * &s1 * &s1 * &s1,
        &s0 * &s0 * &s0,
    );
    (mean, var, third)
}

/// Running float sums of the closed-form uniform-weight step moments, for
/// horizons where exact sums are impractical.
#[derive(Debug, Clone, Default)]
pub struct UniformMomentSums {
    steps: usize,
    size: u64,
    pub mean: f64,
    pub variance: f64,
    pub third: f64,
}

impl UniformMomentSums {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a step with multiplicity `n`.
    pub fn push(&mut self, n: u64) {
        let prev = self.size as f64;
        let total = (self.size + n) as f64;
        let n_f = n as f64;
        let var = n_f * (total + 1.0) * prev / ((prev + 1.0) * (prev + 1.0) * (prev + 2.0));
        self.mean += n_f / (prev + 1.0);
        self.variance += var;
        self.third += var * (n_f + total + 1.0) * (prev - 1.0) / ((prev + 1.0) * (prev + 3.0));
        self.size += n;
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// `Σ third / Var^{3/2}`; zero when the variance vanishes.
    pub fn lyapunov_ratio(&self) -> f64 {
        if self.variance <= 0.0 {
            0.0
        } else {
            self.third / self.variance.powf(1.5)
        }
    }
}

/// Lyapunov ratio `Σ_{s≤t} E[(X_s - E X_s)^3] / Var(K_t)^{3/2}` at uniform
/// weight, over the first `up_to` steps of the profile.
pub fn lyapunov_ratio(profile: &Profile, up_to: usize) -> f64 {
    let mut sums = UniformMomentSums::new();
    for &n in &profile.multiplicities()[..up_to.min(profile.len())] {
        sums.push(n as u64);
    }
    sums.lyapunov_ratio()
}

/// Total variation distance between the law of `K_t` and the Poisson law
/// with the same mean.
pub fn tv_poisson(profile: &Profile, theta: &Theta) -> f64 {
    tv_poisson_of(&k_pmf(profile, theta))
}

pub fn tv_poisson_of(pmf: &CyclePmf) -> f64 {
    let lambda = pmf.mean_f64();
    let masses = pmf.to_f64();
    let at = |k: usize| {
        k.checked_sub(pmf.support_min())
            .and_then(|i| masses.get(i).copied())
            .unwrap_or(0.0)
    };
    if lambda == 0.0 {
        // Poisson(0) is the point mass at zero.
        let l1: f64 = (0..=pmf.support_max())
            .map(|k| (at(k) - if k == 0 { 1.0 } else { 0.0 }).abs())
            .sum();
        return 0.5 * l1;
    }
    let ln_lambda = lambda.ln();
    let mut ln_term = -lambda;
    let mut l1 = 0.0;
    let mut k = 0usize;
    loop {
        let poisson = ln_term.exp();
        l1 += (at(k) - poisson).abs();
        // Past the support and the mode, the remaining Poisson mass is
        // bounded by a geometric series of ratio lambda/(k+1) < 1.
        if k >= pmf.support_max() && (k as f64) > lambda && poisson < 1e-17 {
            break;
        }
        k += 1;
        ln_term += ln_lambda - (k as f64).ln();
    }
    0.5 * l1
}
