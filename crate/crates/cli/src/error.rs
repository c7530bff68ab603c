use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] nqs_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 3 for numerical aborts, 1 for I/O failures, 2 for everything the
    /// config or inputs got wrong.
    pub fn exit_code(&self) -> u8 {
        use nqs_core::Error as E;
        match self {
            CliError::Core(
                E::NonFinite(_) | E::NotConverged { .. } | E::Factorization(_) | E::EstimatorSingular | E::Integration(_),
            ) => 3,
            CliError::Io { .. } | CliError::Core(E::Io(_)) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
