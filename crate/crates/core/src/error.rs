use thiserror::Error;

/// Errors raised while building or evaluating the circuit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator must be square, got {rows} rows of {len} entries")]
    NotSquare { rows: usize, len: usize },

    #[error("empty state or operator")]
    Empty,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid beam splitter: alpha={alpha}, beta={beta} ({reason})")]
    InvalidSplitter {
        alpha: f64,
        beta: f64,
        reason: &'static str,
    },

    /// The system matrix is singular or too badly conditioned to trust.
    #[error("singular system (condition estimate {condition_estimate:e})")]
    Singular { condition_estimate: f64 },

    /// Both output channels carry zero amplitude, so no outcome can be sampled.
    #[error("both output channels are zero; collapse is undefined")]
    ZeroOutput,

    #[error("fixed-point iteration did not converge after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("second pass absent: the time-travel channel was not triggered")]
    SecondPassAbsent,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
