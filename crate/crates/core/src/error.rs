use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid iterated function system: {0}")]
    InvalidIfs(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// A work budget ran out. `partial` carries the best enclosure reached
    /// when the failing operation produces one.
    #[error("budget exceeded in {what}")]
    BudgetExceeded {
        what: &'static str,
        partial: Option<(f64, f64)>,
    },

    #[error("no admissible n found up to {cap}")]
    IterationCap { cap: u64 },

    #[error("strong separation could not be certified")]
    SscUnknown,

    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
