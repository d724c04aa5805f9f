use thiserror::Error;

/// Errors raised by the allocation engine and its oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain of a model function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a system invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A bit allocation violates the budget or per-link range.
    #[error("infeasible allocation: {0}")]
    Infeasible(String),

    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Exhaustive enumeration refused because the case count exceeds the cap.
    #[error("enumeration of {count} cases exceeds cap {cap}")]
    EnumerationTooLarge { count: u128, cap: u128 },

    /// The generic eigensolver oracle did not converge.
    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
