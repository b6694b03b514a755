//! Monte Carlo harness for the asymptotic behaviour of the cycle count:
//! sampled law checks, CLT checks, growth and trajectory tables, and the
//! distance to Poisson.
//!
//! Replicate `i` always draws from `replicate_seed(seed, i)`, and results
//! are collected in replicate order, so reports do not depend on the
//! thread pool.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::crp::{sample_permutation, CycleCountSampler};
use crate::distribution::{tv_poisson, UniformMomentSums};
use crate::error::{Error, Result};
use crate::oracle::{exact_law, DEFAULT_FACTORIZATION_CAP};
use crate::perm::{format_word, Profile};
use crate::rational::{rational_to_f64, Theta};
use crate::rng::{replicate_seed, RandomSource};
use crate::stats::{
    chi_square_test, ks_p_value, ks_statistic, lattice_ks_statistic, normal_cdf, summary,
};

/// Shape of a multiplicity sequence `n_1, n_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `n_s = n`.
    Constant(usize),
    /// `n_s = max(1, floor(scale * s^exponent))`.
    Polynomial { scale: f64, exponent: f64 },
    /// `n_s = 1`: the classical process.
    Ones,
    /// A fixed finite list.
    Explicit(Vec<usize>),
}

impl ProfileKind {
    /// Multiplicity of letter `s` (1-based), or `None` past the end of an
    /// explicit list.
    pub fn multiplicity(&self, s: usize) -> Option<usize> {
        match self {
            ProfileKind::Constant(n) => Some(*n),
            ProfileKind::Polynomial { scale, exponent } => {
                let v = (scale * (s as f64).powf(*exponent)).floor();
                Some(if v < 1.0 { 1 } else { v as usize })
            }
            ProfileKind::Ones => Some(1),
            ProfileKind::Explicit(list) => list.get(s.checked_sub(1)?).copied(),
        }
    }

    /// Growth exponent `α` in `E(K_t) ~ (α + 1) log t`; zero for bounded
    /// multiplicities.
    pub fn exponent(&self) -> f64 {
        match self {
            ProfileKind::Polynomial { exponent, .. } => *exponent,
            _ => 0.0,
        }
    }

    /// The first `t` multiplicities.
    pub fn profile(&self, t: usize) -> Result<Profile> {
        (1..=t)
            .map(|s| {
                self.multiplicity(s)
                    .ok_or(Error::ProfileExhausted { len: s - 1 })
            })
            .collect::<Result<Vec<_>>>()
            .map(Profile::new)
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileKind::Constant(n) => write!(f, "const:{n}"),
            ProfileKind::Polynomial { scale, exponent } => write!(f, "poly:{scale},{exponent}"),
            ProfileKind::Ones => write!(f, "ones"),
            ProfileKind::Explicit(list) => {
                write!(f, "list:")?;
                for (i, n) in list.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{n}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ProfileKind {
    type Err = Error;

    /// Accepts `const:N`, `poly:C,ALPHA`, `ones` and `list:n1,n2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid profile generator {s:?}"));
        let s = s.trim();
        if s == "ones" {
            return Ok(ProfileKind::Ones);
        }
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "const" => {
                let n: usize = args.trim().parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(ProfileKind::Constant(n))
            }
            "poly" => {
                let (c, a) = args.split_once(',').ok_or_else(bad)?;
                let scale: f64 = c.trim().parse().map_err(|_| bad())?;
                let exponent: f64 = a.trim().parse().map_err(|_| bad())?;
                if !(scale > 0.0 && exponent > 0.0 && scale.is_finite() && exponent.is_finite()) {
                    return Err(bad());
                }
                Ok(ProfileKind::Polynomial { scale, exponent })
            }
            "list" => {
                let profile: Profile = args.parse()?;
                if profile.multiplicities().contains(&0) {
                    return Err(bad());
                }
                Ok(ProfileKind::Explicit(profile.multiplicities().to_vec()))
            }
            _ => Err(bad()),
        }
    }
}

/// A profile shape together with the horizon `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGenerator {
    pub kind: ProfileKind,
    pub horizon: usize,
}

impl ProfileGenerator {
    pub fn new(kind: ProfileKind, horizon: usize) -> Self {
        ProfileGenerator { kind, horizon }
    }

    pub fn profile(&self) -> Result<Profile> {
        self.kind.profile(self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsReport {
    /// Distance to the normal CDF with continuity correction.
    pub statistic: f64,
    /// Distance without the correction.
    pub uncorrected: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Category {
    pub word: String,
    pub observed: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub categories: Vec<Category>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: &'static str,
    pub profile: String,
    pub horizon: usize,
    pub theta: String,
    pub replicates: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<u64>>,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub sample_skewness: f64,
    pub theoretical_mean: f64,
    pub theoretical_variance: f64,
    /// Set when `Var(K_t) = 0`, so nothing can be standardized.
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<KsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi_square: Option<ChiSquareReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

impl ExperimentReport {
    /// Whether every test in the report stays within the given limits.
    /// Absent tests pass.
    pub fn passes(&self, max_ks: f64, min_p: f64) -> bool {
        let ks = self.ks.as_ref().is_none_or(|k| k.statistic < max_ks);
        let chi = self.chi_square.as_ref().is_none_or(|c| c.p_value > min_p);
        ks && chi
    }

    /// Sample mean within `z` standard errors of the theoretical mean.
    pub fn mean_within(&self, z: f64) -> bool {
        let se = (self.theoretical_variance / self.replicates as f64).sqrt();
        (self.sample_mean - self.theoretical_mean).abs() <= z * se
    }
}

fn sample_stats(values: &[u64]) -> (f64, f64, f64) {
    let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    summary(&as_f64)
}

/// Samples whole permutations and tests the word frequencies against the
/// exact law `θ^{|π|}/S`.
pub fn run_law_check(
    profile: &Profile,
    theta: &Theta,
    replicates: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let law = exact_law(profile, theta, DEFAULT_FACTORIZATION_CAP)?;
    let index: BTreeMap<&Vec<u32>, usize> =
        law.masses.keys().enumerate().map(|(i, w)| (w, i)).collect();
    let draws: Vec<(Vec<u32>, u64)> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomSource::from_seed(replicate_seed(seed, i));
            let state = sample_permutation(profile, theta, &mut rng);
            (state.permutation().to_word(), state.cycle_count() as u64)
        })
        .collect();
    let mut observed = vec![0u64; law.masses.len()];
    for (word, _) in &draws {
        observed[index[word]] += 1;
    }
    let probabilities: Vec<f64> = law.masses.values().map(rational_to_f64).collect();
    let test = chi_square_test(&observed, &probabilities);
    let categories = law
        .masses
        .keys()
        .zip(&observed)
        .zip(&probabilities)
        .map(|((word, &o), &p)| Category {
            word: format_word(word),
            observed: o,
            expected: p * replicates as f64,
        })
        .collect();

    let values: Vec<u64> = draws.iter().map(|(_, k)| *k).collect();
    let (sample_mean, sample_variance, sample_skewness) = sample_stats(&values);
    let k_law = law.cycle_count_law();
    let k_f: Vec<f64> = k_law.iter().map(rational_to_f64).collect();
    let mean: f64 = k_f.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let variance: f64 = k_f
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64 - mean).powi(2) * p)
        .sum();

    Ok(ExperimentReport {
        experiment: "law-check",
        profile: profile.to_string(),
        horizon: profile.len(),
        theta: theta.to_string(),
        replicates,
        seed,
        values: Some(values),
        sample_mean,
        sample_variance,
        sample_skewness,
        theoretical_mean: mean,
        theoretical_variance: variance,
        degenerate: variance == 0.0,
        ks: None,
        chi_square: Some(ChiSquareReport {
            statistic: test.statistic,
            df: test.df,
            p_value: test.p_value,
            categories,
        }),
        wall_clock_ms: None,
    })
}

/// Mean and variance of `K_t`: closed forms at `θ = 1`, otherwise sums of
/// the exact per-step moments.
fn theoretical_moments(
    profile: &Profile,
    theta: &Theta,
    sampler: &CycleCountSampler,
) -> (f64, f64) {
    if theta.is_one() {
        let mut sums = UniformMomentSums::new();
        for &n in profile.multiplicities() {
            sums.push(n as u64);
        }
        (sums.mean, sums.variance)
    } else {
        let (m, v, _) = sampler.moments();
        (m, v)
    }
}

/// Draws `K_t` independently per replicate and measures the KS distance of
/// the standardized counts to `N(0, 1)`.
pub fn run_clt(
    gen: &ProfileGenerator,
    theta: &Theta,
    replicates: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    let profile = gen.profile()?;
    let sampler = CycleCountSampler::new(&profile, theta);
    let values: Vec<u64> = (0..replicates as u64)
        .into_par_iter()
        .map(|i| sampler.sample(&mut RandomSource::from_seed(replicate_seed(seed, i))) as u64)
        .collect();
    let (mean, variance) = theoretical_moments(&profile, theta, &sampler);
    let (sample_mean, sample_variance, sample_skewness) = sample_stats(&values);
    let degenerate = variance <= 0.0;
    let ks = (!degenerate && !values.is_empty()).then(|| {
        let sd = variance.sqrt();
        let ints: Vec<i64> = values.iter().map(|&v| v as i64).collect();
        let statistic = lattice_ks_statistic(&ints, mean, sd);
        let standardized: Vec<f64> = values.iter().map(|&v| (v as f64 - mean) / sd).collect();
        KsReport {
            statistic,
            uncorrected: ks_statistic(&standardized, normal_cdf),
            p_value: ks_p_value(statistic, values.len()),
        }
    });
    Ok(ExperimentReport {
        experiment: "clt",
        profile: gen.kind.to_string(),
        horizon: gen.horizon,
        theta: theta.to_string(),
        replicates,
        seed,
        values: Some(values),
        sample_mean,
        sample_variance,
        sample_skewness,
        theoretical_mean: mean,
        theoretical_variance: variance,
        degenerate,
        ks,
        chi_square: None,
        wall_clock_ms: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub t: usize,
    pub mean: f64,
    pub variance: f64,
    /// `E(K_t) / log t`; absent at `t = 1`.
    pub mean_over_log: Option<f64>,
    pub variance_over_log: Option<f64>,
    /// `E(K_t) / ((α + 1) log t)`.
    pub mean_over_scaled_log: Option<f64>,
}

fn ratio_to_log(x: f64, t: usize, scale: f64) -> Option<f64> {
    (t > 1).then(|| x / (scale * (t as f64).ln()))
}

/// `E(K_t)` and `Var(K_t)` at uniform weight for each checkpoint.
pub fn run_growth(kind: &ProfileKind, checkpoints: &[usize]) -> Result<Vec<GrowthRow>> {
    let mut targets = checkpoints.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let scale = kind.exponent() + 1.0;
    let mut sums = UniformMomentSums::new();
    let mut rows = Vec::with_capacity(targets.len());
    for t in targets {
        while sums.steps() < t {
            let s = sums.steps() + 1;
            let n = kind
                .multiplicity(s)
                .ok_or(Error::ProfileExhausted { len: s - 1 })?;
            sums.push(n as u64);
        }
        rows.push(GrowthRow {
            t,
            mean: sums.mean,
            variance: sums.variance,
            mean_over_log: ratio_to_log(sums.mean, t, 1.0),
            variance_over_log: ratio_to_log(sums.variance, t, 1.0),
            mean_over_scaled_log: ratio_to_log(sums.mean, t, scale),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub k: u64,
    pub mean: f64,
    /// `K_t / E(K_t)`.
    pub ratio: f64,
    /// `K_t / (θ log t)`; absent at `t = 1`.
    pub k_over_log: Option<f64>,
}

/// One sampled path of `K_1, K_2, ...` reported at the checkpoints.
pub fn run_trajectory(
    gen: &ProfileGenerator,
    theta: &Theta,
    seed: u64,
    checkpoints: &[usize],
) -> Result<Vec<TrajectoryRow>> {
    let profile = gen.profile()?;
    if let Some(&t) = checkpoints.iter().find(|&&t| t == 0 || t > profile.len()) {
        return Err(Error::StepOutOfRange {
            step: t,
            len: profile.len(),
        });
    }
    let sampler = CycleCountSampler::new(&profile, theta);
    let mut rng = RandomSource::from_seed(seed);
    let theta_f = theta.to_f64();
    let mut k = 0u64;
    let mut mean = 0.0;
    let mut path = Vec::with_capacity(profile.len());
    for step in sampler.steps() {
        k += step.sample(&mut rng) as u64;
        mean += step.moments().0;
        path.push((k, mean));
    }
    let mut targets = checkpoints.to_vec();
    targets.sort_unstable();
    targets.dedup();
    Ok(targets
        .into_iter()
        .map(|t| {
            let (k, mean) = path[t - 1];
            TrajectoryRow {
                t,
                k,
                mean,
                ratio: k as f64 / mean,
                k_over_log: ratio_to_log(k as f64, t, theta_f),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TvRow {
    pub n: usize,
    pub tv: f64,
    /// `tv * log n`, roughly flat if the distance decays like `1/log n`.
    pub tv_log_n: f64,
}

/// Distance from the classical cycle count to Poisson for `n = 2^j`,
/// `j` in `min_exponent..=max_exponent`.
pub fn run_tv_curve(min_exponent: u32, max_exponent: u32) -> Vec<TvRow> {
    (min_exponent..=max_exponent)
        .map(|j| {
            let n = 1usize << j;
            let tv = tv_poisson(&Profile::ones(n), &Theta::one());
            TvRow {
                n,
                tv,
                tv_log_n: tv * (n as f64).ln(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovRow {
    pub t: usize,
    pub ratio: f64,
}

/// Lyapunov ratio at uniform weight for each checkpoint.
pub fn run_lyapunov(kind: &ProfileKind, checkpoints: &[usize]) -> Result<Vec<LyapunovRow>> {
    let mut targets = checkpoints.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let mut sums = UniformMomentSums::new();
    let mut rows = Vec::with_capacity(targets.len());
    for t in targets {
        while sums.steps() < t {
            let s = sums.steps() + 1;
            let n = kind
                .multiplicity(s)
                .ok_or(Error::ProfileExhausted { len: s - 1 })?;
            sums.push(n as u64);
        }
        rows.push(LyapunovRow {
            t,
            ratio: sums.lyapunov_ratio(),
        });
    }
    Ok(rows)
}

/// Rows rendered as plot-ready CSV.
pub trait CsvRow {
    const HEADER: &'static str;
    fn csv(&self) -> String;
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl CsvRow for GrowthRow {
    const HEADER: &'static str =
        "t,mean,variance,mean_over_log,variance_over_log,mean_over_scaled_log";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t,
            self.mean,
            self.variance,
            opt(self.mean_over_log),
            opt(self.variance_over_log),
            opt(self.mean_over_scaled_log)
        )
    }
}

impl CsvRow for TrajectoryRow {
    const HEADER: &'static str = "t,k,mean,ratio,k_over_log";
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.t,
            self.k,
            self.mean,
            self.ratio,
            opt(self.k_over_log)
        )
    }
}

impl CsvRow for TvRow {
    const HEADER: &'static str = "n,tv,tv_log_n";
    fn csv(&self) -> String {
        format!("{},{},{}", self.n, self.tv, self.tv_log_n)
    }
}

impl CsvRow for LyapunovRow {
    const HEADER: &'static str = "t,ratio";
    fn csv(&self) -> String {
        format!("{},{}", self.t, self.ratio)
    }
}

pub fn to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::from(R::HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv());
        out.push('\n');
    }
    out
}
