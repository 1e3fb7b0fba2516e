use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for ground set of size {bound}")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error(
        "instance generation failed after {attempts} attempts \
         (last c_min = {last_cmin:e}, last gap = {last_gap:e})"
    )]
    GenerationFailed {
        attempts: usize,
        last_cmin: f64,
        last_gap: f64,
    },

    #[error("enumeration of {count} subset pairs exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("horizon {n} is smaller than the required {required}")]
    InsufficientHorizon { n: u64, required: u64 },

    #[error("need at least {required} points on the swept axis, got {got}")]
    InsufficientData { got: usize, required: usize },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
