//! Multiset permutations and the intercalation product.
//!
//! A permutation of `M(n_1, ..., n_t)` is stored as one successor word per
//! letter: `w_a` lists, left to right, the bottom-line entries sitting under
//! the copies of `a` in the two-line array. Concatenating `w_1 w_2 ... w_t`
//! gives the one-line word, and intercalation is letterwise concatenation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::binomial;

/// Multiplicities `n_1, ..., n_t` of the letters `1..=t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct Profile {
    multiplicities: Vec<usize>,
    prefix: Vec<usize>,
}

impl Profile {
    pub fn new(multiplicities: Vec<usize>) -> Self {
        let mut prefix = Vec::with_capacity(multiplicities.len() + 1);
        prefix.push(0);
        let mut acc = 0usize;
        for &n in &multiplicities {
            acc += n;
            prefix.push(acc);
        }
        Profile {
            multiplicities,
            prefix,
        }
    }

    /// The profile of ordinary permutations of `[n]`.
    pub fn ones(n: usize) -> Self {
        Profile::new(vec![1; n])
    }

    /// Number of distinct letters `t`.
    pub fn len(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multiplicities.is_empty()
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// `n_letter`, zero for letters beyond the alphabet.
    pub fn multiplicity(&self, letter: usize) -> usize {
        if letter == 0 {
            return 0;
        }
        self.multiplicities.get(letter - 1).copied().unwrap_or(0)
    }

    /// `N_s = n_1 + ... + n_s`, saturating at the total for `s > t`.
    pub fn prefix_total(&self, s: usize) -> usize {
        self.prefix[s.min(self.len())]
    }

    /// `N_t`, the size of the multiset.
    pub fn total(&self) -> usize {
        *self.prefix.last().unwrap()
    }

    /// The profile `(n_1, ..., n_s)`.
    pub fn prefix(&self, s: usize) -> Profile {
        Profile::new(self.multiplicities[..s.min(self.len())].to_vec())
    }

    /// `N_t! / (n_1! ... n_t!)`, computed as `prod_s C(N_s, n_s)`.
    pub fn permutation_count(&self) -> BigUint {
        (1..=self.len())
            .map(|s| binomial(self.prefix_total(s) as i64, self.multiplicity(s) as u64))
            .product()
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::new(Vec::new())
    }
}

impl From<Vec<usize>> for Profile {
    fn from(v: Vec<usize>) -> Self {
        Profile::new(v)
    }
}

impl From<Profile> for Vec<usize> {
    fn from(p: Profile) -> Self {
        p.multiplicities
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.multiplicities.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Comma-separated multiplicities, e.g. `3,2,1,4`. The empty string is
    /// the empty profile.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Profile::default());
        }
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("multiplicity {part:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Profile::new)
    }
}

/// A permutation of a multiset, stored as per-letter successor words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    profile: Profile,
    words: Vec<Vec<u32>>,
}

impl Permutation {
    pub fn empty() -> Self {
        Permutation {
            profile: Profile::default(),
            words: Vec::new(),
        }
    }

    /// Reads a one-line word against a profile.
    pub fn from_word(word: &[u32], profile: &Profile) -> Result<Self> {
        if word.len() != profile.total() {
            return Err(Error::LengthMismatch {
                expected: profile.total(),
                found: word.len(),
            });
        }
        check_counts(word.iter().copied(), profile)?;
        let words = (1..=profile.len())
            .map(|a| word[profile.prefix_total(a - 1)..profile.prefix_total(a)].to_vec())
            .collect();
        Ok(Permutation {
            profile: profile.clone(),
            words,
        })
    }

    /// Builds a permutation from its per-letter words. The profile is read
    /// off the word lengths; the bottom line must rearrange the top line.
    pub fn from_letter_words(words: Vec<Vec<u32>>) -> Result<Self> {
        let profile = Profile::new(words.iter().map(Vec::len).collect());
        check_counts(words.iter().flatten().copied(), &profile)?;
        Ok(Permutation { profile, words })
    }

    /// The one-line word `w_1 w_2 ... w_t`.
    pub fn to_word(&self) -> Vec<u32> {
        self.words.concat()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Successor word of `letter` (1-based); empty beyond the alphabet.
    pub fn letter_word(&self, letter: u32) -> &[u32] {
        match (letter as usize).checked_sub(1) {
            Some(i) if i < self.words.len() => &self.words[i],
            _ => &[],
        }
    }

    pub fn letter_words(&self) -> &[Vec<u32>] {
        &self.words
    }

    /// Number of entries `N_t`.
    pub fn len(&self) -> usize {
        self.profile.total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The intercalation product `self ⊥ other`.
    pub fn intercalate(&self, other: &Permutation) -> Permutation {
        let t = self.words.len().max(other.words.len());
        let words: Vec<Vec<u32>> = (1..=t as u32)
            .map(|a| {
                let mut w = self.letter_word(a).to_vec();
                w.extend_from_slice(other.letter_word(a));
                w
            })
            .collect();
        Permutation {
            profile: Profile::new(words.iter().map(Vec::len).collect()),
            words,
        }
    }

    /// Two-line array, top line sorted.
    pub fn two_line(&self) -> String {
        let top: Vec<u32> = self
            .words
            .iter()
            .enumerate()
            .flat_map(|(i, w)| std::iter::repeat_n(i as u32 + 1, w.len()))
            .collect();
        format!("{}\n{}", format_word(&top), format_word(&self.to_word()))
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_word(&self.to_word()))
    }
}

fn check_counts(letters: impl Iterator<Item = u32>, profile: &Profile) -> Result<()> {
    let mut counts = vec![0usize; profile.len()];
    for letter in letters {
        match (letter as usize).checked_sub(1) {
            Some(i) if i < counts.len() => counts[i] += 1,
            _ => {
                return Err(Error::LetterOutOfRange {
                    letter,
                    max: profile.len(),
                })
            }
        }
    }
    for (i, &found) in counts.iter().enumerate() {
        let expected = profile.multiplicity(i + 1);
        if found != expected {
            return Err(Error::CountMismatch {
                letter: i as u32 + 1,
                expected,
                found,
            });
        }
    }
    Ok(())
}

/// A cycle `(x_1 ... x_m)`: the permutation whose columns `x_i -> x_{i+1}`
/// (cyclically) are stably sorted by top letter. Rotations are generally
/// different permutations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cycle(Vec<u32>);

impl Cycle {
    pub fn new(elements: Vec<u32>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyCycle { index: 0 });
        }
        if let Some(&letter) = elements.iter().find(|&&x| x == 0) {
            return Err(Error::LetterOutOfRange {
                letter,
                max: elements.iter().copied().max().unwrap_or(0) as usize,
            });
        }
        Ok(Cycle(elements))
    }

    pub fn singleton(letter: u32) -> Self {
        Cycle(vec![letter])
    }

    pub fn elements(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The last written element.
    pub fn leader(&self) -> u32 {
        *self.0.last().expect("cycles are nonempty")
    }

    /// Elements before the leader.
    pub fn body(&self) -> &[u32] {
        &self.0[..self.0.len() - 1]
    }

    pub(crate) fn elements_mut(&mut self) -> &mut Vec<u32> {
        &mut self.0
    }

    pub fn to_permutation(&self) -> Permutation {
        let t = self.0.iter().copied().max().unwrap_or(0) as usize;
        let mut words = vec![Vec::new(); t];
        let m = self.0.len();
        for (i, &x) in self.0.iter().enumerate() {
            words[x as usize - 1].push(self.0[(i + 1) % m]);
        }
        Permutation {
            profile: Profile::new(words.iter().map(Vec::len).collect()),
            words,
        }
    }
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", format_word(&self.0))
    }
}

pub fn format_word(word: &[u32]) -> String {
    let parts: Vec<String> = word.iter().map(u32::to_string).collect();
    parts.join(" ")
}

/// Parses whitespace-separated positive letters.
pub fn parse_word(s: &str) -> Result<Vec<u32>> {
    s.split_whitespace()
        .map(|tok| match tok.parse::<u32>() {
            Ok(0) => Err(Error::Parse("letters start at 1".into())),
            Ok(x) => Ok(x),
            Err(e) => Err(Error::Parse(format!("letter {tok:?}: {e}"))),
        })
        .collect()
}

/// The smallest profile a word is a permutation of.
pub fn profile_of_word(word: &[u32]) -> Profile {
    let t = word.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0usize; t];
    for &x in word {
        if x > 0 {
            counts[x as usize - 1] += 1;
        }
    }
    Profile::new(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<u32> {
        parse_word(s).unwrap()
    }

    #[test]
    fn letter_words_of_the_running_example() {
        let profile = Profile::new(vec![3, 2, 1, 4]);
        let p = Permutation::from_word(&w("3 1 2 4 4 1 2 4 1 4"), &profile).unwrap();
        assert_eq!(p.letter_word(1), &[3, 1, 2]);
        assert_eq!(p.letter_word(2), &[4, 4]);
        assert_eq!(p.letter_word(3), &[1]);
        assert_eq!(p.letter_word(4), &[2, 4, 1, 4]);
        assert_eq!(p.to_word(), w("3 1 2 4 4 1 2 4 1 4"));
    }

    #[test]
    fn empty_word() {
        let p = Permutation::from_word(&[], &Profile::default()).unwrap();
        assert!(p.is_empty());
        assert_eq!(p.to_word(), Vec::<u32>::new());
        assert_eq!(p, Permutation::empty());
    }

    #[test]
    fn small_word_matches_brute_force_resort() {
        let word = w("2 1 2");
        let profile = Profile::new(vec![1, 2]);
        let p = Permutation::from_word(&word, &profile).unwrap();
        assert_eq!(p.letter_word(1), &[2]);
        assert_eq!(p.letter_word(2), &[1, 2]);

        // Independent route: pair sorted top line with the word and group
        // columns by top letter.
        let mut top = word.clone();
        top.sort();
        let mut cols: Vec<(u32, u32)> = top.into_iter().zip(word.iter().copied()).collect();
        cols.sort_by_key(|c| c.0);
        let grouped: Vec<Vec<u32>> = (1..=2)
            .map(|a| cols.iter().filter(|c| c.0 == a).map(|c| c.1).collect())
            .collect();
        assert_eq!(p.letter_words(), grouped.as_slice());
    }

    #[test]
    fn mismatches_name_the_letter() {
        let profile = Profile::new(vec![1, 2]);
        assert_eq!(
            Permutation::from_word(&w("1 1 2"), &profile),
            Err(Error::CountMismatch {
                letter: 1,
                expected: 1,
                found: 2
            })
        );
        assert_eq!(
            Permutation::from_word(&w("1 2"), &profile),
            Err(Error::LengthMismatch {
                expected: 3,
                found: 2
            })
        );
        assert_eq!(
            Permutation::from_word(&w("1 2 3"), &profile),
            Err(Error::LetterOutOfRange { letter: 3, max: 2 })
        );
    }

    #[test]
    fn intercalation_example() {
        let p1 = Permutation::from_word(&w("3 1 4 1 2"), &Profile::new(vec![2, 1, 1, 1])).unwrap();
        let p2 = Permutation::from_word(&w("2 4 4 1 4"), &Profile::new(vec![1, 1, 0, 3])).unwrap();
        let p = p1.intercalate(&p2);
        assert_eq!(p.to_word(), w("3 1 2 4 4 1 2 4 1 4"));
        assert_eq!(p.profile(), &Profile::new(vec![3, 2, 1, 4]));
    }

    #[test]
    fn intercalation_identity() {
        let p = Permutation::from_word(&w("2 1 2"), &Profile::new(vec![1, 2])).unwrap();
        assert_eq!(p.intercalate(&Permutation::empty()), p);
        assert_eq!(Permutation::empty().intercalate(&p), p);
    }

    #[test]
    fn intercalation_against_stable_sort_oracle() {
        // (2 1) ⊥ (2): juxtapose two-line arrays and stably sort by top.
        let p1 = Permutation::from_word(&w("2 1"), &Profile::new(vec![1, 1])).unwrap();
        let p2 = Permutation::from_word(&w("2"), &Profile::new(vec![0, 1])).unwrap();
        let cols = [(1u32, 2u32), (2, 1), (2, 2)];
        let mut sorted = cols.to_vec();
        sorted.sort_by_key(|c| c.0);
        let bottom: Vec<u32> = sorted.iter().map(|c| c.1).collect();
        assert_eq!(p1.intercalate(&p2).to_word(), bottom);
        assert_eq!(bottom, w("2 1 2"));
    }

    #[test]
    fn cycles_to_permutations() {
        let c = Cycle::new(w("4 2 4 4 1 3 1 1 2 4")).unwrap();
        assert_eq!(c.to_permutation().to_word(), w("3 1 2 4 4 1 2 4 1 4"));
        assert_eq!(Cycle::singleton(4).to_permutation().to_word(), w("4"));
        assert_eq!(
            Cycle::singleton(4).to_permutation().profile(),
            &Profile::new(vec![0, 0, 0, 1])
        );
        assert_eq!(
            Cycle::new(w("2 1")).unwrap().to_permutation().to_word(),
            w("2 1")
        );
        assert!(Cycle::new(vec![]).is_err());
    }

    #[test]
    fn two_line_rendering() {
        let p = Permutation::from_word(&w("2 1 2"), &Profile::new(vec![1, 2])).unwrap();
        assert_eq!(p.two_line(), "1 2 2\n2 1 2");
    }

    #[test]
    fn profile_parsing_and_prefix_sums() {
        let p: Profile = "3, 2,1,4".parse().unwrap();
        assert_eq!(p.multiplicities(), &[3, 2, 1, 4]);
        assert_eq!(p.prefix_total(0), 0);
        assert_eq!(p.prefix_total(2), 5);
        assert_eq!(p.total(), 10);
        assert_eq!(p.to_string(), "3,2,1,4");
        assert_eq!("".parse::<Profile>().unwrap(), Profile::default());
        assert!("1,x".parse::<Profile>().is_err());
        assert_eq!(p.permutation_count(), BigUint::from(12600u32));
    }

    #[test]
    fn zero_multiplicities_are_absent_letters() {
        let profile = Profile::new(vec![1, 0, 2]);
        let p = Permutation::from_word(&w("3 3 1"), &profile).unwrap();
        assert!(p.letter_word(2).is_empty());
        assert_eq!(p.to_word(), w("3 3 1"));
    }
}
