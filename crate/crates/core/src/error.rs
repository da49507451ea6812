use thiserror::Error;

/// Errors raised by the estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate sample: zero median distance")]
    ZeroMedianDistance,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("all observations down-weighted to zero")]
    AllWeightsZero,

    #[error("requested {requested} canonical components but the regularized problem has rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
