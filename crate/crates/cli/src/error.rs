use std::path::PathBuf;

use thiserror::Error;

/// Exit codes: 0 success, 2 usage, 3 I/O or malformed file, 4 numeric
/// capacity.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{0}")]
    Capacity(String),

    #[error("{0}")]
    Core(gsdenoise::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Capacity(_) => 4,
            CliError::Core(gsdenoise::Error::CapacityExceeded { .. }) => 4,
            CliError::Core(_) => 2,
        }
    }
}

impl From<gsdenoise::Error> for CliError {
    fn from(e: gsdenoise::Error) -> Self {
        CliError::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
