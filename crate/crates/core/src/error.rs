use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidProbVec(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("category {category} outside [1, {k}]")]
    CategoryOutOfRange { category: usize, k: usize },

    #[error("prefix length {t} exceeds sample size {n}")]
    PrefixOutOfRange { t: usize, n: usize },

    #[error("counts sum to {got}, expected {expected}")]
    CountSumMismatch { expected: u64, got: u64 },

    #[error("gamma must be finite and non-negative, got {0}")]
    InvalidGamma(f64),

    #[error("delta must lie in (0, 1), got {0}")]
    DeltaOutOfRange(f64),

    #[error("sample size {n} too small: need at least {min}")]
    SampleSizeTooSmall { n: usize, min: usize },

    #[error("density ratio {ratio} at category {index} violates the precondition")]
    RatioPrecondition { index: usize, ratio: f64 },

    #[error("lower-bound construction invalid: {0}")]
    Construction(String),

    #[error("instance too large to enumerate: {outcomes} outcomes exceeds limit {limit}")]
    InstanceTooLarge { outcomes: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}
