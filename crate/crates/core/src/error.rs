//! Error type shared by all modules.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A randomized generator gave up after its retry budget.
    #[error("generation failed: {0}")]
    GenerationFailed(String),

    /// Paper-mode sample scheduling ran out of fresh samples.
    #[error("sample budget exhausted: requested sample {requested}, pool holds {available}")]
    BudgetExhausted { requested: u64, available: usize },

    /// A cell of the observation log lacks the observations a reduction needs.
    #[error("insufficient observations at expert {expert}, column bin {bin}: need {needed}, have {have}")]
    InsufficientObservations {
        expert: usize,
        bin: usize,
        needed: usize,
        have: usize,
    },

    /// An iterative solver hit its iteration cap.
    #[error("numeric nonconvergence after {iterations} iterations")]
    NumericNonconvergence { iterations: usize },

    /// An internal invariant does not hold.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    /// I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
