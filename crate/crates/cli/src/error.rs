use std::path::PathBuf;

use mcflab_core::Error;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("checks failed: {}", .0.join(", "))]
    Check(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Check(_) => 3,
        }
    }

    pub fn from_config(e: Error) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }
}

/// Errors caused by the configured problem map to exit code 1, breakdowns of the numerics to 2.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidGrid(_)
            | Error::GridTooSmall { .. }
            | Error::OutOfRange(_)
            | Error::BracketNotFound { .. }
            | Error::NotMeanConvex { .. }
            | Error::NotConvex { .. } => Self::Config(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}
