//! Brute-force ground truth for small instances.
//!
//! Nothing here calls the factorization algorithm to decide what a valid
//! decomposition is: decompositions are generated directly from the two
//! canonical-form conditions, and CRP laws are obtained by walking every
//! branch of the process.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::crp::CrpState;
use crate::distribution::{
    k_pmf, normalizer, step_law, step_normalizer, uniform_step_mass, NhgParams,
};
use crate::error::{Error, Result};
use crate::factorization::{compose_unchecked, factorize, CycleDecomposition};
use crate::perm::{format_word, Cycle, Permutation, Profile};
use crate::rational::{ratio, Theta};

pub const DEFAULT_ENUMERATION_CAP: usize = 9;
pub const DEFAULT_FACTORIZATION_CAP: usize = 7;

fn check_cap(profile: &Profile, cap: usize) -> Result<()> {
    if profile.total() > cap {
        return Err(Error::CapExceeded {
            size: profile.total(),
            cap,
        });
    }
    Ok(())
}

/// All permutations of the multiset, in lexicographic order.
pub fn enumerate_permutations(profile: &Profile, cap: usize) -> Result<Vec<Vec<u32>>> {
    check_cap(profile, cap)?;
    let mut word: Vec<u32> = (1..=profile.len() as u32)
        .flat_map(|a| std::iter::repeat_n(a, profile.multiplicity(a as usize)))
        .collect();
    let mut out = vec![word.clone()];
    while next_permutation(&mut word) {
        out.push(word.clone());
    }
    Ok(out)
}

fn next_permutation(w: &mut [u32]) -> bool {
    let Some(i) = (1..w.len()).rev().find(|&i| w[i - 1] < w[i]) else {
        return false;
    };
    let j = (i..w.len())
        .rev()
        .find(|&j| w[j] > w[i - 1])
        .expect("pivot exists");
    w.swap(i - 1, j);
    w[i..].reverse();
    true
}

/// All profiles with positive multiplicities summing to `size`.
pub fn compositions(size: usize) -> Vec<Profile> {
    fn rec(left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Profile>) {
        if left == 0 {
            out.push(Profile::new(prefix.clone()));
            return;
        }
        for part in 1..=left {
            prefix.push(part);
            rec(left - part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(size, &mut Vec::new(), &mut out);
    out
}

/// `θ^{|π|}/S` for every permutation of the profile.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub profile: Profile,
    pub theta: Theta,
    /// Word -> probability.
    pub masses: BTreeMap<Vec<u32>, BigRational>,
    /// Word -> cycle count.
    pub cycle_counts: BTreeMap<Vec<u32>, usize>,
    /// `Σ_π θ^{|π|}` over the enumeration.
    pub weight_sum: BigRational,
    /// `Π_s F_s(θ)`.
    pub product_formula: BigRational,
}

impl ExactLaw {
    pub fn normalizer_identity_holds(&self) -> bool {
        self.weight_sum == self.product_formula
    }

    /// `P(K = k)` indexed by `k`.
    pub fn cycle_count_law(&self) -> Vec<BigRational> {
        let max = self.cycle_counts.values().copied().max().unwrap_or(0);
        let mut law = vec![BigRational::zero(); max + 1];
        for (word, &k) in &self.cycle_counts {
            law[k] += &self.masses[word];
        }
        law
    }
}

pub fn exact_law(profile: &Profile, theta: &Theta, cap: usize) -> Result<ExactLaw> {
    let words = enumerate_permutations(profile, cap)?;
    let mut cycle_counts = BTreeMap::new();
    let mut weights = BTreeMap::new();
    let mut weight_sum = BigRational::zero();
    for word in words {
        let p = Permutation::from_word(&word, profile)?;
        let k = factorize(&p).len();
        let w = theta.pow(k);
        weight_sum += &w;
        cycle_counts.insert(word.clone(), k);
        weights.insert(word, w);
    }
    let masses = weights
        .into_iter()
        .map(|(word, w)| (word, w / &weight_sum))
        .collect();
    Ok(ExactLaw {
        profile: profile.clone(),
        theta: theta.clone(),
        masses,
        cycle_counts,
        weight_sum,
        product_formula: normalizer(profile, theta),
    })
}

/// Law of the process output obtained by walking every branch: each
/// transition with `k` new cycles and a given composition carries
/// probability `θ^k / F_t(θ)`.
#[derive(Debug, Clone)]
pub struct PathLaw {
    /// Word -> total probability of the paths ending there.
    pub masses: BTreeMap<Vec<u32>, BigRational>,
    /// Word -> number of distinct paths ending there.
    pub path_counts: BTreeMap<Vec<u32>, usize>,
}

pub fn path_law(profile: &Profile, theta: &Theta, cap: usize) -> Result<PathLaw> {
    path_law_until(profile, theta, profile.len(), cap)
}

/// Path law of the process stopped after `steps` letters.
pub fn path_law_until(
    profile: &Profile,
    theta: &Theta,
    steps: usize,
    cap: usize,
) -> Result<PathLaw> {
    path_law_projected(profile, theta, steps, steps, cap)
}

/// Path law after `steps` letters, each outcome projected onto the letters
/// `1..=project_to`.
pub fn path_law_projected(
    profile: &Profile,
    theta: &Theta,
    steps: usize,
    project_to: usize,
    cap: usize,
) -> Result<PathLaw> {
    check_cap(&profile.prefix(steps), cap)?;
    // Per-step probability of one specific transition with k new cycles.
    let transition: Vec<Vec<BigRational>> = (1..=steps)
        .map(|t| {
            let f = step_normalizer(t, profile, theta).expect("step in range");
            (0..=profile.multiplicity(t))
                .map(|k| theta.pow(k) / &f)
                .collect()
        })
        .collect();

    let mut law = PathLaw {
        masses: BTreeMap::new(),
        path_counts: BTreeMap::new(),
    };
    let start = CrpState::new(profile.prefix(steps));
    walk(
        &start,
        BigRational::one(),
        &transition,
        project_to,
        &mut law,
    );
    Ok(law)
}

fn walk(
    state: &CrpState,
    prob: BigRational,
    transition: &[Vec<BigRational>],
    project_to: usize,
    law: &mut PathLaw,
) {
    if state.is_complete() {
        let projected = crate::crp::project(state.decomposition(), project_to);
        let word = compose_unchecked(&projected).to_word();
        *law.masses
            .entry(word.clone())
            .or_insert_with(BigRational::zero) += prob;
        *law.path_counts.entry(word).or_insert(0) += 1;
        return;
    }
    let t = state.step() + 1;
    let n = state.profile().multiplicity(t);
    let slots = state.slot_count();
    for k in 0..=n {
        if slots == 0 && k < n {
            continue;
        }
        for composition in all_compositions(n - k, slots) {
            let mut next = state.clone();
            next.apply_step(k, &composition).expect("valid transition");
            walk(
                &next,
                &prob * &transition[t - 1][k],
                transition,
                project_to,
                law,
            );
        }
    }
}

/// Every composition of `total` into `parts` nonnegative parts.
pub fn all_compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == parts {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for x in 0..=left {
            prefix.push(x);
            rec(left - x, parts, prefix, out);
            prefix.pop();
        }
    }
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Every cycle list over the profile's multiset satisfying both canonical
/// conditions (nondecreasing leaders; non-leaders above their leader).
///
/// Search order: pick the next leader, then grow its body from letters
/// above it. A leader above some unused letter strands that letter forever
/// (later leaders and their bodies are all larger), so the next leader is
/// always the smallest unused letter.
pub fn all_decompositions(profile: &Profile, cap: usize) -> Result<Vec<CycleDecomposition>> {
    check_cap(profile, cap)?;
    let mut remaining: Vec<usize> = profile.multiplicities().to_vec();
    let mut out = Vec::new();
    let mut cycles = Vec::new();
    next_cycle(&mut remaining, &mut cycles, &mut out);
    Ok(out)
}

fn next_cycle(remaining: &mut [usize], cycles: &mut Vec<Cycle>, out: &mut Vec<CycleDecomposition>) {
    let Some(leader_idx) = remaining.iter().position(|&c| c > 0) else {
        out.push(CycleDecomposition::new(cycles.clone()));
        return;
    };
    remaining[leader_idx] -= 1;
    let mut body = Vec::new();
    grow_body(leader_idx, remaining, &mut body, cycles, out);
    remaining[leader_idx] += 1;
}

fn grow_body(
    leader_idx: usize,
    remaining: &mut [usize],
    body: &mut Vec<u32>,
    cycles: &mut Vec<Cycle>,
    out: &mut Vec<CycleDecomposition>,
) {
    // Close the cycle here.
    let mut elements = body.clone();
    elements.push(leader_idx as u32 + 1);
    cycles.push(Cycle::new(elements).expect("nonempty"));
    next_cycle(remaining, cycles, out);
    cycles.pop();

    // Or extend the body by any larger letter still available.
    for x in leader_idx + 1..remaining.len() {
        if remaining[x] == 0 {
            continue;
        }
        remaining[x] -= 1;
        body.push(x as u32 + 1);
        grow_body(leader_idx, remaining, body, cycles, out);
        body.pop();
        remaining[x] += 1;
    }
}

/// All canonical decompositions grouped by the word they compose to.
pub fn decompositions_by_word(
    profile: &Profile,
    cap: usize,
) -> Result<BTreeMap<Vec<u32>, Vec<CycleDecomposition>>> {
    let mut grouped: BTreeMap<Vec<u32>, Vec<CycleDecomposition>> = BTreeMap::new();
    for d in all_decompositions(profile, cap)? {
        grouped
            .entry(compose_unchecked(&d).to_word())
            .or_default()
            .push(d);
    }
    Ok(grouped)
}

/// Every canonical decomposition composing to `word`.
pub fn enumerate_factorizations(
    word: &[u32],
    profile: &Profile,
    cap: usize,
) -> Result<Vec<CycleDecomposition>> {
    Permutation::from_word(word, profile)?;
    Ok(decompositions_by_word(profile, cap)?
        .remove(word)
        .unwrap_or_default())
}

/// Coefficients of `(θz)_n / (θ)_n` (rising factorials), indexed by power.
pub fn classical_k_pgf(n: usize, theta: &Theta) -> Vec<BigRational> {
    // Π_{i<n} (θz + i), then divide by Π (θ + i).
    let mut poly = vec![BigRational::one()];
    let mut denom = BigRational::one();
    for i in 0..n {
        let shift = BigRational::from_integer((i as i64).into());
        let mut next = vec![BigRational::zero(); poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d] += c * &shift;
            next[d + 1] += c * theta.value();
        }
        poly = next;
        denom *= theta.value() + shift;
    }
    poly.into_iter().map(|c| c / &denom).collect()
}

/// `N!/(n_1!...n_t!)` via factorials, independent of the binomial product.
pub fn multinomial(profile: &Profile) -> BigUint {
    let fact = |n: usize| (1..=n as u64).fold(BigUint::one(), |acc, i| acc * i);
    let denom = profile
        .multiplicities()
        .iter()
        .fold(BigUint::one(), |acc, &n| acc * fact(n));
    fact(profile.total()) / denom
}

pub fn exact_mass(law: &BTreeMap<Vec<u32>, BigRational>, word: &[u32]) -> BigRational {
    law.get(word).cloned().unwrap_or_else(BigRational::zero)
}

/// Ratio helper for tests that build expected masses from integer weights.
pub fn normalized(weights: &[u64]) -> Vec<BigRational> {
    let total: BigUint = weights.iter().map(|&w| BigUint::from(w)).sum();
    weights
        .iter()
        .map(|&w| ratio(&BigUint::from(w), &total))
        .collect()
}

/// Outcome of one family of oracle checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub cases: usize,
    /// First few failing cases, described.
    pub counterexamples: Vec<String>,
    pub failures: usize,
}

impl CheckOutcome {
    fn new(name: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            cases: 0,
            counterexamples: Vec::new(),
            failures: 0,
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.counterexamples.len() < 5 {
                self.counterexamples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs every oracle comparison on all profiles of size up to `max_size`.
pub fn verify_suite(max_size: usize, thetas: &[Theta]) -> Result<Vec<CheckOutcome>> {
    let mut count = CheckOutcome::new("enumeration count equals multinomial");
    let mut unique = CheckOutcome::new("factorization round trip and uniqueness");
    let mut step = CheckOutcome::new("uniform step law is negative hypergeometric");
    let mut laws: Vec<CheckOutcome> = thetas
        .iter()
        .map(|th| CheckOutcome::new(format!("path law equals theta^|pi|/S (theta={th})")))
        .collect();
    let mut counts: Vec<CheckOutcome> = thetas
        .iter()
        .map(|th| CheckOutcome::new(format!("cycle count law equals k_pmf (theta={th})")))
        .collect();
    let mut classical = CheckOutcome::new("all-ones k_pmf equals (theta z)_n/(theta)_n");

    for size in 0..=max_size {
        for profile in compositions(size) {
            let words = enumerate_permutations(&profile, max_size)?;
            count.record(BigUint::from(words.len()) == multinomial(&profile), || {
                format!("profile {profile}: {} words", words.len())
            });

            let grouped = decompositions_by_word(&profile, max_size)?;
            for word in &words {
                let p = Permutation::from_word(word, &profile)?;
                let d = factorize(&p);
                let found = grouped.get(word).map(Vec::as_slice).unwrap_or(&[]);
                let ok =
                    compose_unchecked(&d).to_word() == *word && found.len() == 1 && found[0] == d;
                unique.record(ok, || {
                    format!(
                        "word {}: factorize gives {d}, search found {}",
                        format_word(word),
                        found.len()
                    )
                });
            }

            for t in 1..=profile.len() {
                let law = step_law(t, &profile, &Theta::one())?;
                let nhg = NhgParams::new(
                    profile.prefix_total(t) as u64,
                    profile.prefix_total(t - 1) as u64,
                    1,
                );
                for k in 0..=profile.multiplicity(t) {
                    let a = law.mass(k);
                    let b = uniform_step_mass(t, &profile, k)?;
                    let c = nhg.pmf(k as u64 + 1);
                    step.record(a == b && b == c, || {
                        format!("profile {profile}, t={t}, k={k}: {a} / {b} / {c}")
                    });
                }
            }

            for (i, theta) in thetas.iter().enumerate() {
                let exact = exact_law(&profile, theta, max_size)?;
                let paths = path_law(&profile, theta, max_size)?;
                let ok = exact.normalizer_identity_holds() && paths.masses == exact.masses;
                laws[i].record(ok, || format!("profile {profile}"));

                let pmf = k_pmf(&profile, theta);
                let from_words = exact.cycle_count_law();
                let ok = (0..from_words.len().max(pmf.support_max() + 1)).all(|k| {
                    pmf.mass(k) == from_words.get(k).cloned().unwrap_or_else(BigRational::zero)
                });
                counts[i].record(ok, || format!("profile {profile}"));
            }
        }
    }

    for n in 1..=max_size.max(1) {
        for theta in thetas {
            let pmf = k_pmf(&Profile::ones(n), theta);
            let pgf = classical_k_pgf(n, theta);
            let ok = pgf.iter().enumerate().all(|(k, c)| pmf.mass(k) == *c);
            classical.record(ok, || format!("n={n}, theta={theta}"));
        }
    }

    let mut out = vec![count, unique, step];
    out.extend(laws);
    out.extend(counts);
    out.push(classical);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::parse_word;

    fn prof(v: &[usize]) -> Profile {
        Profile::new(v.to_vec())
    }

    fn th(s: &str) -> Theta {
        s.parse().unwrap()
    }

    fn dec(s: &str) -> CycleDecomposition {
        s.parse().unwrap()
    }

    #[test]
    fn permutation_listing() {
        let words = enumerate_permutations(&prof(&[1, 2]), 9).unwrap();
        assert_eq!(words, vec![vec![1, 2, 2], vec![2, 1, 2], vec![2, 2, 1]]);
        assert_eq!(
            enumerate_permutations(&prof(&[2]), 9).unwrap(),
            vec![vec![1, 1]]
        );
        assert_eq!(enumerate_permutations(&prof(&[1, 1]), 9).unwrap().len(), 2);
        assert_eq!(
            enumerate_permutations(&Profile::default(), 9).unwrap(),
            vec![Vec::<u32>::new()]
        );
        assert!(matches!(
            enumerate_permutations(&Profile::ones(10), 9),
            Err(Error::CapExceeded { size: 10, cap: 9 })
        ));
    }

    #[test]
    fn permutation_counts() {
        for size in 0..=8 {
            for profile in compositions(size) {
                let n = enumerate_permutations(&profile, 9).unwrap().len();
                assert_eq!(BigUint::from(n), multinomial(&profile));
                assert_eq!(profile.permutation_count(), multinomial(&profile));
            }
        }
    }

    #[test]
    fn exact_law_examples() {
        let law = exact_law(&prof(&[1, 2]), &th("1"), 9).unwrap();
        assert!(law.normalizer_identity_holds());
        assert_eq!(
            law.masses.values().cloned().collect::<Vec<_>>(),
            normalized(&[1, 1, 1])
        );
        let law = exact_law(&prof(&[1, 2]), &th("2"), 9).unwrap();
        assert_eq!(
            law.masses.values().cloned().collect::<Vec<_>>(),
            normalized(&[8, 4, 2])
        );
        assert_eq!(
            law.cycle_counts.values().copied().collect::<Vec<_>>(),
            vec![3, 2, 1]
        );
        let law = exact_law(&prof(&[2]), &th("3/4"), 9).unwrap();
        assert_eq!(exact_mass(&law.masses, &[1, 1]), BigRational::one());
    }

    #[test]
    fn factorization_search_examples() {
        assert_eq!(
            enumerate_factorizations(&[1, 1], &prof(&[2]), 7).unwrap(),
            vec![dec("(1)(1)")]
        );
        assert_eq!(
            enumerate_factorizations(&[2, 1, 2], &prof(&[1, 2]), 7).unwrap(),
            vec![dec("(2 1)(2)")]
        );
        assert_eq!(
            enumerate_factorizations(&[2, 2, 1], &prof(&[1, 2]), 7).unwrap(),
            vec![dec("(2 2 1)")]
        );
        assert!(enumerate_factorizations(&[1, 2], &prof(&[1, 2]), 7).is_err());
    }

    #[test]
    fn running_example_has_one_factorization() {
        // Ten letters exceed the default cap; the search is still quick.
        let profile = prof(&[3, 2, 1, 4]);
        let word = parse_word("3 1 2 4 4 1 2 4 1 4").unwrap();
        let found = enumerate_factorizations(&word, &profile, 10).unwrap();
        assert_eq!(found, vec![dec("(3 1)(1)(2 4 2 4 4 1)(4)")]);
    }

    #[test]
    fn verify_suite_small() {
        let thetas: Vec<Theta> = ["1/2", "1", "2"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let report = verify_suite(4, &thetas).unwrap();
        assert_eq!(report.len(), 10);
        for check in &report {
            assert!(check.passed() && check.cases > 0, "{check:?}");
        }
    }

    #[test]
    fn classical_pgf_examples() {
        assert_eq!(classical_k_pgf(1, &th("5")), normalized(&[0, 1]));
        assert_eq!(classical_k_pgf(3, &th("1")), normalized(&[0, 2, 3, 1]));
        assert_eq!(classical_k_pgf(2, &th("2")), normalized(&[0, 2, 4]));
    }

    #[test]
    fn path_law_small() {
        let law = path_law(&prof(&[1, 2]), &th("2"), 9).unwrap();
        assert_eq!(
            law.masses.values().cloned().collect::<Vec<_>>(),
            normalized(&[4, 2, 1])
        );
        assert!(law.path_counts.values().all(|&c| c == 1));
    }

    #[test]
    fn composition_listing() {
        assert_eq!(
            all_compositions(2, 2),
            vec![vec![0, 2], vec![1, 1], vec![2, 0]]
        );
        assert_eq!(all_compositions(0, 0), vec![Vec::<usize>::new()]);
        assert!(all_compositions(1, 0).is_empty());
        assert_eq!(all_compositions(3, 4).len(), 20);
        assert_eq!(compositions(4).len(), 8);
    }
}
