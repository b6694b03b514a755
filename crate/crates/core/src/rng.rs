//! Seeded random source with exact uniform draws below big-integer bounds.

use num_bigint::BigUint;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Deterministic stream: the same seed always yields the same draws.
#[derive(Debug, Clone)]
pub struct RandomSource {
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn from_seed(seed: u64) -> Self {
        RandomSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform integer in `[0, bound)` by rejection; `bound` must be nonzero.
    pub fn below_u64(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // Accept draws in the largest multiple of `bound` below 2^64.
        let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
        loop {
            let x = self.rng.next_u64();
            if x <= zone {
                return x % bound;
            }
        }
    }

    /// `n` uniform random bits as a big integer.
    pub fn bits(&mut self, n: u64) -> BigUint {
        let words = n.div_ceil(32) as usize;
        let mut digits: Vec<u32> = (0..words).map(|_| self.rng.next_u32()).collect();
        let extra = words as u64 * 32 - n;
        if let Some(top) = digits.last_mut() {
            if extra > 0 {
                *top >>= extra;
            }
        }
        BigUint::new(digits)
    }

    /// Uniform big integer in `[0, bound)`: draw `bits(bound)` bits and
    /// reject values at or above the bound.
    pub fn below(&mut self, bound: &BigUint) -> BigUint {
        assert!(bound.bits() > 0, "empty range");
        if bound.bits() <= 64 {
            let b: u64 = bound.try_into().expect("fits in u64");
            return BigUint::from(self.below_u64(b));
        }
        loop {
            let x = self.bits(bound.bits());
            if &x < bound {
                return x;
            }
        }
    }
}

/// Seed of replicate `index` under a master seed (SplitMix64 finalizer of
/// `master + (index + 1) * golden gamma`).
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = RandomSource::from_seed(7);
        let mut b = RandomSource::from_seed(7);
        let big = BigUint::from(3u32) << 200u32;
        for _ in 0..50 {
            assert_eq!(a.below(&big), b.below(&big));
            assert_eq!(a.below_u64(10), b.below_u64(10));
        }
        let mut c = RandomSource::from_seed(8);
        assert_ne!(
            (0..4).map(|_| a.next_u64()).collect::<Vec<_>>(),
            (0..4).map(|_| c.next_u64()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn below_stays_in_range_and_covers_it() {
        let mut r = RandomSource::from_seed(1);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.below_u64(5) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| (850..1150).contains(&c)), "{seen:?}");

        // 2^70 + 1: bit-length rejection with small acceptance margin.
        let bound = (BigUint::from(1u32) << 70u32) + 1u32;
        let half = &bound >> 1u32;
        let mut low = 0;
        for _ in 0..2000 {
            let x = r.below(&bound);
            assert!(x < bound);
            if x < half {
                low += 1;
            }
        }
        assert!((850..1150).contains(&low), "{low}");
    }

    #[test]
    fn bits_width() {
        let mut r = RandomSource::from_seed(3);
        for n in [1u64, 31, 32, 33, 100] {
            for _ in 0..20 {
                assert!(r.bits(n).bits() <= n);
            }
        }
    }

    #[test]
    fn replicate_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> =
            (0..1000).map(|i| replicate_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
