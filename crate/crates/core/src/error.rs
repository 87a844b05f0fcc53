//! Error type shared by the whole crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (malformed matrix, bad probability,
    /// non-Hermitian operator, incomplete POVM, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Dimensions of the inputs do not fit together.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A constraint set admits no state.
    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    /// Requested a case outside the supported scale (e.g. tensor-power
    /// constraints beyond n = 2).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Two redundant computation paths disagreed beyond tolerance; indicates
    /// a numerical breakdown, not a user error.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),

    /// An a-posteriori verification failed (e.g. a supporting constraint
    /// whose constrained optimum does not reproduce the target value).
    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
