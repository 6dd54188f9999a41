use std::io;
use std::path::PathBuf;

use crate::pgm::PgmError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] klt_mbi_core::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: PgmError,
    },
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(klt_mbi_core::Error::InvalidInput(_)) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io { .. } | RunError::Image { .. } => 4,
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;
