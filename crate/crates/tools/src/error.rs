use std::path::PathBuf;

use thiserror::Error;

/// Tool-level failures, grouped by the exit code they map to:
/// 1 = usage, 2 = data, 3 = internal.
#[derive(Debug, Error)]
pub enum ToolError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl ToolError {
    pub fn file(path: impl Into<PathBuf>, message: impl Into<String>) -> ToolError {
        ToolError::File {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Usage(_) => 1,
            ToolError::Data(_) | ToolError::File { .. } => 2,
            ToolError::Internal(_) => 3,
        }
    }
}

impl From<std::io::Error> for ToolError {
    fn from(e: std::io::Error) -> ToolError {
        ToolError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for ToolError {
    fn from(e: serde_json::Error) -> ToolError {
        ToolError::Data(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ToolError>;
