use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconError {
    #[error("symbol {0} is not in the basis")]
    NotInBasis(String),
    #[error("character undefined on generator {0}")]
    UndefinedCharacter(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("divergent sum: {0}")]
    DivergentSum(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("build aborted: {0}")]
    BuildAborted(String),
}

pub type Result<T> = std::result::Result<T, ReconError>;

impl From<std::io::Error> for ReconError {
    fn from(e: std::io::Error) -> Self {
        ReconError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for ReconError {
    fn from(e: serde_json::Error) -> Self {
        ReconError::Parse(e.to_string())
    }
}
