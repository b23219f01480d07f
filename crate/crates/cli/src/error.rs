use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Exit code when every command step succeeded but a verification check failed.
pub const EXIT_CHECKS_FAILED: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("run error: {0}")]
    Run(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    /// 2 is left to argument parsing errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 3,
            Self::Run(_) => 4,
            Self::Io { .. } => 5,
            Self::Data(_) => 6,
        }
    }

    pub fn config(e: impl ToString) -> Self {
        Self::Config(e.to_string())
    }

    pub fn run(e: impl ToString) -> Self {
        Self::Run(e.to_string())
    }
}

pub type CliResult<V> = Result<V, CliError>;
