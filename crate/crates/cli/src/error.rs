use dbx_core::converse::ConverseError;
use dbx_core::{CapacityError, ExponentError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Parse(String),
    #[error("refused: {0}")]
    Budget(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse(_) | CliError::Io(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<ConverseError> for CliError {
    fn from(e: ConverseError) -> Self {
        match e {
            ConverseError::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<CapacityError> for CliError {
    fn from(e: CapacityError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<ExponentError> for CliError {
    fn from(e: ExponentError) -> Self {
        CliError::Parse(e.to_string())
    }
}
