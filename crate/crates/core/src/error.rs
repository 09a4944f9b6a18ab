use thiserror::Error;

/// Errors raised by constructors, transforms and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid coefficient: {0}")]
    InvalidCoefficient(String),
    #[error("invalid terminal condition: {0}")]
    InvalidTerminal(String),
    #[error("family mismatch: expected {expected}, got {found}")]
    FamilyMismatch { expected: String, found: String },
    #[error("y = {y} is outside the driver domain")]
    OutsideDomain { y: f64 },
    #[error("non-positive terminal value {value} at state {state:?}")]
    NonPositiveTerminal { value: f64, state: Vec<f64> },
    #[error("transform precondition failed: {0}")]
    Transform(String),
    #[error("fixed point did not converge at time index {time_index}, node {node}: residual {residual:e}")]
    NonConvergence {
        time_index: usize,
        node: usize,
        residual: f64,
    },
    #[error("non-finite value at time index {time_index}, node {node}")]
    NonFinite { time_index: usize, node: usize },
    #[error("regression design is rank deficient at step {step}")]
    RankDeficient { step: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
