use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no a-point enumerator available for {0}")]
    NoEnumerator(String),

    #[error("mapping {0} is missing a Jacobian evaluator")]
    NoJacobian(String),

    #[error("value lies within chordal margin {margin:e} of the boundary image (distance {distance:e})")]
    MarginViolation { margin: f64, distance: f64 },

    #[error("non-convergence in {context}: {detail}")]
    NonConvergence { context: &'static str, detail: String },

    #[error("evaluation failed at {at:?}: {detail}")]
    Evaluation { at: Vec<f64>, detail: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown map kind `{0}`")]
    UnknownKind(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
