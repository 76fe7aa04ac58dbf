use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("corrupt journal {path} at line {line}: {message}")]
    Journal {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] nflab_core::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and usage problems, 3 for divergence, 4 for a corrupt journal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(nflab_core::Error::Divergence { .. }) => 3,
            CliError::Journal { .. } => 4,
            _ => 2,
        }
    }
}
