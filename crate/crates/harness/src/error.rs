use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type HarnessResult<T> = Result<T, HarnessError>;

impl HarnessError {
    /// 1 config error, 2 runtime failure, 3 failed check.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            HarnessError::Config(_) => ExitCode::from(1),
            HarnessError::Runtime(_) => ExitCode::from(2),
            HarnessError::CheckFailed(_) => ExitCode::from(3),
        }
    }
}

impl From<stablelike::Error> for HarnessError {
    fn from(e: stablelike::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}
