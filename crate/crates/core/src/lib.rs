//! Chinese restaurant process for multiset permutations.
//!
//! Permutations of the multiset with `n_i` copies of each letter `i` are
//! grown one letter at a time: at step `t` some copies of `t` open new
//! singleton cycles and the rest are slotted into the existing cycles. With
//! weight `θ` per cycle, the result has law `θ^{|π|} / S`. The crate samples
//! that process, factors permutations into canonical cycles, computes the
//! exact law of the cycle count, and ships brute-force oracles and Monte
//! Carlo experiments to check all of it.

pub mod crp;
pub mod distribution;
pub mod error;
pub mod experiments;
pub mod factorization;
pub mod oracle;
pub mod perm;
pub mod rational;
pub mod rng;
pub mod stats;

pub use crp::{sample_permutation, CrpState};
pub use distribution::{k_pmf, CyclePmf, NhgParams};
pub use error::{Error, Result};
pub use factorization::{compose, factorize, CycleDecomposition};
pub use perm::{Cycle, Permutation, Profile};
pub use rational::Theta;
pub use rng::RandomSource;
