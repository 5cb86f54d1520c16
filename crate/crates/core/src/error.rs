use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient dimension: need {needed}, got {got}")]
    InsufficientDimension { needed: usize, got: usize },

    #[error("index {index} out of range (max {max})")]
    OutOfRange { index: usize, max: usize },

    #[error("expected a {expected} table, got {got}")]
    WrongKind {
        expected: &'static str,
        got: &'static str,
    },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("monomial degree {degree} exceeds covariance order {max}")]
    DegreeExceeded { degree: usize, max: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("simulation diverged at step {step}")]
    SimulationDiverged { step: usize },

    #[error("insufficient replicas: need at least {min}, got {got}")]
    InsufficientReplicas { min: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
