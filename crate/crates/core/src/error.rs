use thiserror::Error;

/// Which of the two canonical-form conditions a cycle list violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Leaders must be nondecreasing from left to right.
    LeaderOrder,
    /// Every non-leader element must strictly exceed its cycle's leader.
    LeaderMinimal,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::LeaderOrder => f.write_str("leaders must be nondecreasing"),
            Condition::LeaderMinimal => f.write_str("non-leader elements must exceed the leader"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error("word has length {found}, profile total is {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("letter {letter} occurs {found} times, profile requires {expected}")]
    CountMismatch {
        letter: u32,
        expected: usize,
        found: usize,
    },

    #[error("letter {letter} outside alphabet 1..={max}")]
    LetterOutOfRange { letter: u32, max: usize },

    #[error("cycle {index} is empty")]
    EmptyCycle { index: usize },

    #[error("cycle {index}: {condition}")]
    ConditionViolated { index: usize, condition: Condition },

    #[error("step {step} outside 1..={len}")]
    StepOutOfRange { step: usize, len: usize },

    #[error("profile exhausted after {len} steps")]
    ProfileExhausted { len: usize },

    #[error("size {size} exceeds enumeration cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error("theta must be a positive rational, got {0}")]
    InvalidTheta(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
