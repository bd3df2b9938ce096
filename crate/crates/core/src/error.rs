use thiserror::Error;

/// Errors produced by the estimators and diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sample matrix: {0}")]
    InvalidSample(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lag {lag} out of range for a chain of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("batch size {b} leaves fewer than two batches in {n} iterations")]
    InsufficientBatches { n: usize, b: usize },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("estimated variance of component {component} is negative ({value})")]
    NegativeVariance { component: usize, value: f64 },

    #[error("no positive-definite partial sum for any truncation m <= {max_m}")]
    NoPdTruncation { max_m: usize },

    #[error("density estimate failed: {0}")]
    Density(String),

    #[error("root search failed: {0}")]
    Bracket(String),
}

impl Error {
    /// True for failures caused by the numbers themselves (as opposed to bad
    /// arguments or malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite(_)
                | Error::NegativeVariance { .. }
                | Error::NoPdTruncation { .. }
                | Error::Density(_)
                | Error::Bracket(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
