//! Error classification for exit codes: usage/validation failures exit 2,
//! runtime/numeric failures exit 1.

use mvsdg_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, malformed config/input files, missing paths.
    #[error("{0}")]
    Usage(String),
    /// Failures while computing: training, evaluation, I/O mid-run.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Schema { .. }
            | CoreError::Parse { .. }
            | CoreError::Validation(_)
            | CoreError::Config(_) => Self::Usage(err.to_string()),
            _ => Self::Runtime(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::Runtime(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::Usage(format!("malformed JSON: {err}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        Self::Usage(format!("malformed CSV: {err}"))
    }
}
