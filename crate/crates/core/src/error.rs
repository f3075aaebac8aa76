use thiserror::Error;

/// Failures reported by the toolkit.
///
/// Mathematical negatives (a form that is not associated, a set that is not
/// invariant) are *not* errors; they are carried by [`crate::Certificate`]s.
/// The variants here are reserved for bad input, unmet preconditions and
/// internal cross-checks that disagree beyond tolerance.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("condition ({condition}) violated: {detail}")]
    ConditionViolated { condition: &'static str, detail: String },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
