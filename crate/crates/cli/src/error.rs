use std::path::PathBuf;

use thiserror::Error;

use crate::validate::Diagnostic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("config has {} problem(s); first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    Invalid(Vec<Diagnostic>),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] jumpform::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Process exit code: 4 for configuration problems, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) | CliError::Core(_) => 4,
            CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }
}
