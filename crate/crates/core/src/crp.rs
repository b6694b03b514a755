//! The multiset Chinese restaurant process.
//!
//! Step `t` places the `n_t` copies of letter `t` into the canonical cycle
//! list built so far. `k` of them open new singleton cycles `(t)`, chosen
//! with probability proportional to `θ^k C(N_{t-1} - 1 + n_t - k, n_t - k)`;
//! the other `n_t - k` are spread over the `N_{t-1}` existing elements by a
//! uniform composition and inserted immediately to the left of their slot.
//! Since `t` exceeds every letter already placed, both canonical-form
//! conditions survive each step.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::distribution::{raw_step_weights, step_law, weight_moments_f64, StepLaw};
use crate::error::{Error, Result};
use crate::factorization::{compose_with_profile, factorize, CycleDecomposition};
use crate::perm::{Cycle, Permutation, Profile};
use crate::rational::Theta;
use crate::rng::RandomSource;

/// Law of the number of new cycles at step `t` (1-based).
pub fn step_distribution(t: usize, profile: &Profile, theta: &Theta) -> Result<StepLaw> {
    step_law(t, profile, theta)
}

/// Exact sampler for one step law.
///
/// The cumulative integer masses are summarized by their top 64 bits; a
/// draw reads the top 64 bits of a uniform integer below the total and only
/// falls back to full-width comparison when those bits land exactly on a
/// cell boundary. Either way the draw is exactly distributed.
#[derive(Debug, Clone)]
pub struct StepSampler {
    prev_total: usize,
    multiplicity: usize,
    theta: Theta,
    table: CdfTable,
    moments: (f64, f64, f64),
}

#[derive(Debug, Clone)]
enum CdfTable {
    /// Cumulative masses, all below 2^64.
    Small(Vec<u64>),
    /// `high[i] = cdf[i] >> shift`, with `bits(total) = shift + 64`.
    Large { high: Vec<u64>, shift: u64 },
}

impl StepSampler {
    pub fn new(prev_total: usize, multiplicity: usize, theta: &Theta) -> Self {
        let weights = raw_step_weights(prev_total, multiplicity, theta);
        let cdf = cumulative(&weights);
        let total = cdf.last().expect("nonempty");
        let table = if total.bits() <= 64 {
            CdfTable::Small(
                cdf.iter()
                    .map(|c| u64::try_from(c).expect("fits"))
                    .collect(),
            )
        } else {
            let shift = total.bits() - 64;
            CdfTable::Large {
                high: cdf
                    .iter()
                    .map(|c| u64::try_from(c >> shift).expect("fits"))
                    .collect(),
                shift,
            }
        };
        StepSampler {
            prev_total,
            multiplicity,
            theta: theta.clone(),
            table,
            moments: weight_moments_f64(&weights),
        }
    }

    pub fn for_step(t: usize, profile: &Profile, theta: &Theta) -> Result<Self> {
        if t == 0 || t > profile.len() {
            return Err(Error::StepOutOfRange {
                step: t,
                len: profile.len(),
            });
        }
        Ok(StepSampler::new(
            profile.prefix_total(t - 1),
            profile.multiplicity(t),
            theta,
        ))
    }

    /// Mean, variance and third central moment of the step law.
    pub fn moments(&self) -> (f64, f64, f64) {
        self.moments
    }

    /// Number of new cycles, exactly distributed.
    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        match &self.table {
            CdfTable::Small(cdf) => {
                let u = rng.below_u64(*cdf.last().unwrap());
                cdf.partition_point(|&c| c <= u) - 1
            }
            CdfTable::Large { high, shift } => loop {
                let h = rng.next_u64();
                let top = *high.last().unwrap();
                if h > top {
                    continue;
                }
                // First boundary whose high part is >= h.
                let idx = high.partition_point(|&c| c < h);
                if high[idx] != h {
                    // high[idx - 1] < h < high[idx] pins the cell.
                    return idx - 1;
                }
                let u = (BigUint::from(h) << *shift) | rng.bits(*shift);
                let cdf = cumulative(&raw_step_weights(
                    self.prev_total,
                    self.multiplicity,
                    &self.theta,
                ));
                if &u >= cdf.last().unwrap() {
                    continue;
                }
                return cdf.partition_point(|c| c <= &u) - 1;
            },
        }
    }
}

fn cumulative(weights: &[BigUint]) -> Vec<BigUint> {
    let mut cdf = Vec::with_capacity(weights.len() + 1);
    let mut acc = BigUint::default();
    cdf.push(acc.clone());
    for w in weights {
        acc += w;
        cdf.push(acc.clone());
    }
    cdf
}

/// Uniform composition of `stars` into `parts` nonnegative parts.
///
/// Star positions are a uniform `stars`-subset of the `parts - 1 + stars`
/// stars-and-bars cells (Floyd's algorithm, sorted); part `p` counts the
/// stars between bar `p - 1` and bar `p`.
pub fn sample_composition(stars: usize, parts: usize, rng: &mut RandomSource) -> Vec<usize> {
    let mut out = vec![0usize; parts];
    if stars == 0 {
        return out;
    }
    assert!(parts > 0, "cannot place {stars} stars into zero parts");
    let cells = parts - 1 + stars;
    let mut chosen = BTreeSet::new();
    for j in (cells - stars)..cells {
        let r = rng.below_u64(j as u64 + 1) as usize;
        if !chosen.insert(r) {
            chosen.insert(j);
        }
    }
    for (rank, pos) in chosen.into_iter().enumerate() {
        out[pos - rank] += 1;
    }
    out
}

/// State of the process after `step` letters have been placed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrpState {
    profile: Profile,
    step: usize,
    decomposition: CycleDecomposition,
    step_counts: Vec<usize>,
}

impl CrpState {
    pub fn new(profile: Profile) -> Self {
        CrpState {
            profile,
            step: 0,
            decomposition: CycleDecomposition::default(),
            step_counts: Vec::new(),
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Letters placed so far.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_complete(&self) -> bool {
        self.step == self.profile.len()
    }

    pub fn decomposition(&self) -> &CycleDecomposition {
        &self.decomposition
    }

    /// New-cycle counts `k_1, ..., k_step`.
    pub fn step_counts(&self) -> &[usize] {
        &self.step_counts
    }

    pub fn cycle_count(&self) -> usize {
        self.decomposition.len()
    }

    /// Current permutation of `M(n_1, ..., n_step)`.
    pub fn permutation(&self) -> Permutation {
        compose_with_profile(&self.decomposition, &self.profile.prefix(self.step))
            .expect("process keeps the decomposition canonical")
    }

    /// Number of slots (elements already placed) the next letter can be
    /// inserted in front of.
    pub fn slot_count(&self) -> usize {
        self.profile.prefix_total(self.step)
    }

    /// Places the next letter deterministically: `composition[p]` copies go
    /// in front of slot `p` (cycles in order, elements left to right), then
    /// `new_cycles` singletons are appended.
    pub fn apply_step(&mut self, new_cycles: usize, composition: &[usize]) -> Result<()> {
        if self.is_complete() {
            return Err(Error::ProfileExhausted {
                len: self.profile.len(),
            });
        }
        let t = self.step + 1;
        let n = self.profile.multiplicity(t);
        let inserted: usize = composition.iter().sum();
        if composition.len() != self.slot_count() {
            return Err(Error::LengthMismatch {
                expected: self.slot_count(),
                found: composition.len(),
            });
        }
        if inserted + new_cycles != n {
            return Err(Error::CountMismatch {
                letter: t as u32,
                expected: n,
                found: inserted + new_cycles,
            });
        }
        let letter = t as u32;
        if inserted > 0 {
            let mut slot = 0usize;
            for cycle in self.decomposition.cycles_mut() {
                let old = std::mem::take(cycle.elements_mut());
                let grown = cycle.elements_mut();
                grown.reserve(old.len());
                for x in old {
                    grown.extend(std::iter::repeat_n(letter, composition[slot]));
                    grown.push(x);
                    slot += 1;
                }
            }
        }
        self.decomposition
            .cycles_mut()
            .extend(std::iter::repeat_n(Cycle::singleton(letter), new_cycles));
        self.step_counts.push(new_cycles);
        self.step = t;
        Ok(())
    }

    /// One random step; returns the number of new cycles.
    pub fn sample_step(&mut self, theta: &Theta, rng: &mut RandomSource) -> Result<usize> {
        if self.is_complete() {
            return Err(Error::ProfileExhausted {
                len: self.profile.len(),
            });
        }
        let t = self.step + 1;
        let n = self.profile.multiplicity(t);
        let k = StepSampler::for_step(t, &self.profile, theta)?.sample(rng);
        let composition = sample_composition(n - k, self.slot_count(), rng);
        self.apply_step(k, &composition)?;
        Ok(k)
    }

    /// The state's decomposition restricted to letters `1..=s`.
    pub fn project(&self, s: usize) -> Result<CycleDecomposition> {
        if s > self.step {
            return Err(Error::StepOutOfRange {
                step: s,
                len: self.step,
            });
        }
        Ok(project(&self.decomposition, s))
    }
}

/// Deletes letters above `s` from every cycle and drops emptied cycles.
pub fn project(d: &CycleDecomposition, s: usize) -> CycleDecomposition {
    let cycles = d
        .cycles()
        .iter()
        .filter_map(|c| {
            let kept: Vec<u32> = c
                .elements()
                .iter()
                .copied()
                .filter(|&x| x as usize <= s)
                .collect();
            (!kept.is_empty()).then(|| Cycle::new(kept).expect("nonempty"))
        })
        .collect();
    CycleDecomposition::new(cycles)
}

/// Runs every step of the profile.
pub fn sample_permutation(profile: &Profile, theta: &Theta, rng: &mut RandomSource) -> CrpState {
    let mut state = CrpState::new(profile.clone());
    while !state.is_complete() {
        state.sample_step(theta, rng).expect("steps remain");
    }
    state
}

/// Unnormalized weight `θ^{cycles}`.
pub fn weight(cycles: usize, theta: &Theta) -> BigRational {
    theta.pow(cycles)
}

pub fn permutation_weight(p: &Permutation, theta: &Theta) -> BigRational {
    weight(factorize(p).len(), theta)
}

/// Draws only the new-cycle counts of the process, which are independent
/// across steps; step samplers are built once and shared across draws.
#[derive(Debug, Clone)]
pub struct CycleCountSampler {
    steps: Vec<StepSampler>,
}

impl CycleCountSampler {
    pub fn new(profile: &Profile, theta: &Theta) -> Self {
        let steps = (1..=profile.len())
            .into_par_iter()
            .map(|t| StepSampler::for_step(t, profile, theta).expect("step in range"))
            .collect();
        CycleCountSampler { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[StepSampler] {
        &self.steps
    }

    /// `K_t` for the full horizon.
    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        self.steps.iter().map(|s| s.sample(rng)).sum()
    }

    /// `k_1, ..., k_t` for one run.
    pub fn sample_path(&self, rng: &mut RandomSource) -> Vec<usize> {
        self.steps.iter().map(|s| s.sample(rng)).collect()
    }

    /// Mean, variance and third central moment of `K_t` (float sums of the
    /// exact per-step moments).
    pub fn moments(&self) -> (f64, f64, f64) {
        self.steps.iter().fold((0.0, 0.0, 0.0), |acc, s| {
            let (m, v, c) = s.moments();
            (acc.0 + m, acc.1 + v, acc.2 + c)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::parse_word;
    use num_traits::One;

    fn th(s: &str) -> Theta {
        s.parse().unwrap()
    }

    fn dec(s: &str) -> CycleDecomposition {
        s.parse().unwrap()
    }

    #[test]
    fn first_step_forces_singletons() {
        for seed in 0..20 {
            let mut rng = RandomSource::from_seed(seed);
            let mut state = CrpState::new(Profile::new(vec![2]));
            assert_eq!(state.sample_step(&th("3/7"), &mut rng).unwrap(), 2);
            assert_eq!(state.decomposition(), &dec("(1)(1)"));
        }
    }

    #[test]
    fn deterministic_steps() {
        let profile = Profile::new(vec![1, 2]);
        let mut state = CrpState::new(profile.clone());
        state.apply_step(1, &[]).unwrap();
        let mut none_new = state.clone();
        none_new.apply_step(0, &[2]).unwrap();
        assert_eq!(none_new.decomposition(), &dec("(2 2 1)"));
        assert_eq!(
            none_new.permutation().to_word(),
            parse_word("2 2 1").unwrap()
        );
        let mut one_new = state.clone();
        one_new.apply_step(1, &[1]).unwrap();
        assert_eq!(one_new.decomposition(), &dec("(2 1)(2)"));
        assert_eq!(
            one_new.permutation().to_word(),
            parse_word("2 1 2").unwrap()
        );
        assert_eq!(one_new.step_counts(), &[1, 1]);

        assert!(state.clone().apply_step(0, &[1]).is_err());
        assert!(state.clone().apply_step(0, &[1, 1]).is_err());
        assert!(one_new.apply_step(0, &[]).is_err());
    }

    #[test]
    fn insertion_goes_left_of_each_slot() {
        let profile = Profile::new(vec![2, 1, 3]);
        let mut state = CrpState::new(profile);
        state.apply_step(2, &[]).unwrap();
        state.apply_step(0, &[0, 1]).unwrap();
        assert_eq!(state.decomposition(), &dec("(1)(2 1)"));
        state.apply_step(1, &[1, 0, 1]).unwrap();
        assert_eq!(state.decomposition(), &dec("(3 1)(2 3 1)(3)"));
        assert!(state.decomposition().is_valid());
    }

    #[test]
    fn projection() {
        let mut state = CrpState::new(Profile::new(vec![1, 2]));
        state.apply_step(1, &[]).unwrap();
        state.apply_step(1, &[1]).unwrap();
        assert_eq!(state.project(1).unwrap(), dec("(1)"));
        assert_eq!(state.project(2).unwrap(), *state.decomposition());
        assert_eq!(state.project(0).unwrap(), CycleDecomposition::default());
        assert!(state.project(3).is_err());
    }

    #[test]
    fn weights() {
        let p = Permutation::from_word(&parse_word("2 2 1").unwrap(), &Profile::new(vec![1, 2]))
            .unwrap();
        assert_eq!(permutation_weight(&p, &th("1")), BigRational::one());
        let p = Permutation::from_word(&parse_word("1 2 2").unwrap(), &Profile::new(vec![1, 2]))
            .unwrap();
        assert_eq!(
            permutation_weight(&p, &th("1/2")),
            "1/8".parse::<Theta>().unwrap().value().clone()
        );
        assert_eq!(
            permutation_weight(&Permutation::empty(), &th("5")),
            BigRational::one()
        );
    }

    #[test]
    fn states_stay_canonical() {
        let profile = Profile::new(vec![2, 3, 1, 4, 2, 3]);
        for seed in 0..200 {
            let mut rng = RandomSource::from_seed(seed);
            let mut state = CrpState::new(profile.clone());
            while !state.is_complete() {
                state.sample_step(&th("2/3"), &mut rng).unwrap();
                assert!(state.decomposition().is_valid());
                assert_eq!(
                    state.decomposition().profile(),
                    profile.prefix(state.step())
                );
                assert_eq!(
                    state.cycle_count(),
                    state.step_counts().iter().sum::<usize>()
                );
            }
            assert_eq!(factorize(&state.permutation()), *state.decomposition());
        }
    }

    #[test]
    fn zero_multiplicity_steps() {
        let profile = Profile::new(vec![0, 2, 0, 1]);
        let mut rng = RandomSource::from_seed(5);
        let state = sample_permutation(&profile, &th("1"), &mut rng);
        assert_eq!(state.step_counts()[0], 0);
        assert_eq!(state.step_counts()[1], 2);
        assert_eq!(state.permutation().profile(), &profile);
    }

    #[test]
    fn same_seed_same_permutation() {
        let profile = Profile::new(vec![3, 2, 1, 4]);
        let a = sample_permutation(&profile, &th("1/2"), &mut RandomSource::from_seed(42));
        let b = sample_permutation(&profile, &th("1/2"), &mut RandomSource::from_seed(42));
        assert_eq!(a, b);
    }

    #[test]
    fn compositions_are_uniform() {
        // 2 stars over 3 parts: C(4, 2) = 6 compositions.
        let mut rng = RandomSource::from_seed(9);
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..6000 {
            let c = sample_composition(2, 3, &mut rng);
            assert_eq!(c.iter().sum::<usize>(), 2);
            *counts.entry(c).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(
            counts.values().all(|&c| (850..1150).contains(&c)),
            "{counts:?}"
        );
        assert!(sample_composition(0, 0, &mut rng).is_empty());
    }

    #[test]
    fn large_table_sampler_matches_law() {
        // Weights far beyond 64 bits take the high-bits path.
        let sampler = StepSampler::new(400, 40, &th("1"));
        assert!(matches!(sampler.table, CdfTable::Large { .. }));
        let law = step_law(2, &Profile::new(vec![400, 40]), &th("1")).unwrap();
        let mean = crate::rational::rational_to_f64(&law.moments().mean);
        let mut rng = RandomSource::from_seed(77);
        let n = 20000;
        let total: usize = (0..n).map(|_| sampler.sample(&mut rng)).sum();
        let sd = crate::rational::rational_to_f64(&law.moments().variance).sqrt();
        let avg = total as f64 / n as f64;
        assert!(
            (avg - mean).abs() < 5.0 * sd / (n as f64).sqrt(),
            "{avg} vs {mean}"
        );
    }

    #[test]
    fn count_sampler_moments() {
        let profile = Profile::new(vec![2; 50]);
        let sampler = CycleCountSampler::new(&profile, &th("2"));
        let exact = crate::distribution::k_moments_weighted(&profile, &th("2"));
        let (m, v, _) = sampler.moments();
        assert!((m - crate::rational::rational_to_f64(&exact.mean)).abs() < 1e-12);
        assert!((v - crate::rational::rational_to_f64(&exact.variance)).abs() < 1e-12);
    }
}
