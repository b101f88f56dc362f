use thiserror::Error;

use crate::qsim::QubitLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register would hold {requested} qubits, cap is {cap}")]
    Resource { requested: usize, cap: usize },

    #[error("unknown qubit label {0}")]
    UnknownLabel(QubitLabel),

    #[error("duplicate qubit label {0}")]
    DuplicateLabel(QubitLabel),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("insufficient trials: {0}")]
    InsufficientTrials(String),

    #[error("malformed transcript at line {line}: {reason}")]
    Transcript { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
