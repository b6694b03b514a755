//! Unique factorization of a multiset permutation into intercalated cycles.
//!
//! Every permutation `π` is `c_1 ⊥ c_2 ⊥ ... ⊥ c_m` where each cycle is
//! written `(x_1 ... x_n y)` with its leader `y` last, leaders are
//! nondecreasing, and each `x_j` strictly exceeds its own leader.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Condition, Error, Result};
use crate::perm::{parse_word, Cycle, Permutation, Profile};

/// Cycles in canonical order, each with its leader written last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct CycleDecomposition {
    cycles: Vec<Cycle>,
}

impl CycleDecomposition {
    /// Wraps cycles without checking the canonical-form conditions.
    pub fn new(cycles: Vec<Cycle>) -> Self {
        CycleDecomposition { cycles }
    }

    /// Wraps cycles, rejecting lists that are not in canonical form.
    pub fn checked(cycles: Vec<Cycle>) -> Result<Self> {
        let d = CycleDecomposition { cycles };
        d.check()?;
        Ok(d)
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn into_cycles(self) -> Vec<Cycle> {
        self.cycles
    }

    pub(crate) fn cycles_mut(&mut self) -> &mut Vec<Cycle> {
        &mut self.cycles
    }

    /// Number of cycles `|π|`.
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// `Ok(())` when the cycles are in canonical form, otherwise the first
    /// offending cycle and the violated condition.
    pub fn check(&self) -> Result<()> {
        let mut prev_leader = 0u32;
        for (index, cycle) in self.cycles.iter().enumerate() {
            if cycle.is_empty() {
                return Err(Error::EmptyCycle { index });
            }
            let leader = cycle.leader();
            if leader < prev_leader {
                return Err(Error::ConditionViolated {
                    index,
                    condition: Condition::LeaderOrder,
                });
            }
            if cycle.body().iter().any(|&x| x <= leader) {
                return Err(Error::ConditionViolated {
                    index,
                    condition: Condition::LeaderMinimal,
                });
            }
            prev_leader = leader;
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.check().is_ok()
    }

    /// Element counts per letter, as a profile.
    pub fn profile(&self) -> Profile {
        let t = self
            .cycles
            .iter()
            .flat_map(|c| c.elements().iter().copied())
            .max()
            .unwrap_or(0) as usize;
        let mut counts = vec![0usize; t];
        for &x in self.cycles.iter().flat_map(|c| c.elements()) {
            counts[x as usize - 1] += 1;
        }
        Profile::new(counts)
    }
}

impl fmt::Display for CycleDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cycles {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for CycleDecomposition {
    type Err = Error;

    /// Parses `(3 1)(1)(2 4 2 4 4 1)(4)`. Whitespace between groups is
    /// ignored; an all-blank string is the empty decomposition.
    fn from_str(s: &str) -> Result<Self> {
        let mut cycles = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected '(' at {rest:?}")))?;
            let close = body
                .find(')')
                .ok_or_else(|| Error::Parse("unclosed cycle".into()))?;
            let elements = parse_word(&body[..close])?;
            if elements.is_empty() {
                return Err(Error::EmptyCycle {
                    index: cycles.len(),
                });
            }
            cycles.push(Cycle::new(elements)?);
            rest = body[close + 1..].trim_start();
        }
        Ok(CycleDecomposition { cycles })
    }
}

/// Peels cycles off the per-letter successor queues.
///
/// Repeatedly take the smallest letter `y` with a nonempty queue and follow
/// successors from `y` (popping the front of the current letter's queue)
/// until `y` comes back; the popped values, ending in `y`, form one cycle.
pub fn factorize(p: &Permutation) -> CycleDecomposition {
    let mut queues: Vec<VecDeque<u32>> = p
        .letter_words()
        .iter()
        .map(|w| w.iter().copied().collect())
        .collect();
    let mut cycles = Vec::new();
    let mut smallest = 0usize;
    loop {
        while smallest < queues.len() && queues[smallest].is_empty() {
            smallest += 1;
        }
        if smallest == queues.len() {
            break;
        }
        let leader = smallest as u32 + 1;
        let mut elements = Vec::new();
        let mut current = leader;
        loop {
            let next = queues[current as usize - 1]
                .pop_front()
                .expect("successor queues stay balanced");
            elements.push(next);
            if next == leader {
                break;
            }
            current = next;
        }
        cycles.push(Cycle::new(elements).expect("nonempty"));
    }
    CycleDecomposition { cycles }
}

/// Intercalates the cycles back into a permutation after checking the
/// canonical-form conditions.
pub fn compose(d: &CycleDecomposition) -> Result<Permutation> {
    d.check()?;
    Ok(compose_unchecked(d))
}

/// Intercalation of the cycles in order, whatever their form.
pub fn compose_unchecked(d: &CycleDecomposition) -> Permutation {
    let t = d.profile().len();
    let mut words = vec![Vec::new(); t];
    for cycle in &d.cycles {
        let elems = cycle.elements();
        let m = elems.len();
        for (i, &x) in elems.iter().enumerate() {
            words[x as usize - 1].push(elems[(i + 1) % m]);
        }
    }
    Permutation::from_letter_words(words).expect("cycles give balanced columns")
}

/// Composes and then re-reads the word against `profile`, which may carry
/// trailing zero multiplicities the cycles cannot express.
pub fn compose_with_profile(d: &CycleDecomposition, profile: &Profile) -> Result<Permutation> {
    let p = compose(d)?;
    Permutation::from_word(&p.to_word(), profile)
}

pub fn cycle_count(p: &Permutation) -> usize {
    factorize(p).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::parse_word;

    fn perm(word: &str, profile: &[usize]) -> Permutation {
        Permutation::from_word(&parse_word(word).unwrap(), &Profile::new(profile.to_vec())).unwrap()
    }

    fn dec(s: &str) -> CycleDecomposition {
        s.parse().unwrap()
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(&perm("1 1", &[2])), dec("(1)(1)"));
        assert_eq!(factorize(&perm("2 1 2", &[1, 2])), dec("(2 1)(2)"));
        assert_eq!(
            factorize(&perm("3 1 2 4 4 1 2 4 1 4", &[3, 2, 1, 4])),
            dec("(3 1)(1)(2 4 2 4 4 1)(4)")
        );
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose(&dec("(1)(1)")).unwrap().to_word(), vec![1, 1]);
        assert_eq!(compose(&dec("(2 1)(2)")).unwrap().to_word(), vec![2, 1, 2]);
        assert_eq!(
            compose(&dec("(3 1)(1)(2 4 2 4 4 1)(4)")).unwrap().to_word(),
            parse_word("3 1 2 4 4 1 2 4 1 4").unwrap()
        );
    }

    #[test]
    fn compose_agrees_with_intercalating_cycle_permutations() {
        let d = dec("(3 1)(1)(2 4 2 4 4 1)(4)");
        let folded = d.cycles().iter().fold(Permutation::empty(), |acc, c| {
            acc.intercalate(&c.to_permutation())
        });
        assert_eq!(compose(&d).unwrap(), folded);
    }

    #[test]
    fn the_printed_factorization_does_not_recompose() {
        // The alternative factorization sometimes quoted for this example
        // gives letter 1 the successor word [4, 2, ...], not [3, 1, 2].
        let d = dec("(4 4 2 3 4 2 2 3 1)(2 1)(3 4 2)(4)");
        let p = compose_unchecked(&d);
        assert_eq!(&p.letter_word(1)[..2], &[4, 2]);
        assert_ne!(p.to_word(), parse_word("3 1 2 4 4 1 2 4 1 4").unwrap());
    }

    #[test]
    fn validation() {
        assert!(dec("(3 1)(1)").is_valid());
        assert!(dec("(2 1)(3 1)").is_valid());
        assert_eq!(
            dec("(1 3)").check(),
            Err(Error::ConditionViolated {
                index: 0,
                condition: Condition::LeaderMinimal
            })
        );
        assert_eq!(
            dec("(2)(1)").check(),
            Err(Error::ConditionViolated {
                index: 1,
                condition: Condition::LeaderOrder
            })
        );
        assert_eq!(
            dec("(1 1)").check(),
            Err(Error::ConditionViolated {
                index: 0,
                condition: Condition::LeaderMinimal
            })
        );
        assert!(compose(&dec("(1 3)")).is_err());
    }

    #[test]
    fn cycle_counts() {
        assert_eq!(cycle_count(&perm("1 2 2", &[1, 2])), 3);
        assert_eq!(cycle_count(&perm("2 1 2", &[1, 2])), 2);
        assert_eq!(cycle_count(&perm("2 2 1", &[1, 2])), 1);
        assert_eq!(cycle_count(&Permutation::empty()), 0);
    }

    #[test]
    fn text_round_trip() {
        let s = "(3 1)(1)(2 4 2 4 4 1)(4)";
        assert_eq!(dec(s).to_string(), s);
        assert_eq!(dec(" (3 1) (1) ").to_string(), "(3 1)(1)");
        assert_eq!(dec(""), CycleDecomposition::default());
        assert!("(3 1".parse::<CycleDecomposition>().is_err());
        assert!("()".parse::<CycleDecomposition>().is_err());
        assert!("3 1".parse::<CycleDecomposition>().is_err());
    }

    #[test]
    fn trailing_zero_profile() {
        let profile = Profile::new(vec![1, 0]);
        let p = compose_with_profile(&dec("(1)"), &profile).unwrap();
        assert_eq!(p.profile(), &profile);
    }
}
