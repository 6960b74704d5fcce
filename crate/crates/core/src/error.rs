use thiserror::Error;

/// Errors raised by the solvers and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// An inequality the construction or the run depends on does not hold.
    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("sequencing error: {0}")]
    Sequencing(String),

    #[error("blow-up at step {step}: {reason}")]
    BlowUp { step: u64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
