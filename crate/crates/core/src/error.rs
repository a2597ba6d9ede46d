use thiserror::Error;

use crate::qstate::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit label {0} appears in both registers")]
    LabelCollision(Label),
    #[error("qubit label {0} is not part of the register")]
    UnknownLabel(Label),
    #[error("qubit label {0} listed more than once")]
    DuplicateLabel(Label),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("operator is not unitary (deviation {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular cavity parameters: reflection denominator vanishes")]
    SingularParameters,
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("correction is not invertible: {0}")]
    NonInvertible(String),
    #[error("observed probability {observed} is below the leak floor {leak}")]
    InconsistentObservation { observed: f64, leak: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("config error: {0}")]
    Config(String),
}
