use thiserror::Error;

/// Errors raised while building or running a cavity-chain model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mode layout: {0}")]
    InvalidLayout(String),

    #[error("quanta window [{min}, {max}] admits no basis state")]
    EmptyBasis { min: usize, max: usize },

    #[error("mode index {index} out of range for a layout with {len} modes")]
    ModeOutOfRange { index: usize, len: usize },

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("operator is not Hermitian (max |A - A^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid configuration: {key}: {reason}")]
    Config { key: String, reason: String },

    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("propagator was built for dt = {built}, step requested dt = {requested}")]
    StepMismatch { built: f64, requested: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid time step or horizon: {0}")]
    InvalidTime(String),

    #[error("oracle limited to dimension {limit}, basis has {dim} states")]
    OracleTooLarge { dim: usize, limit: usize },

    #[error("invalid sweep: {0}")]
    Sweep(String),
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
