use std::io;
use std::path::PathBuf;

use clustersize_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage, 2 numeric or degenerate, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Config(_) => 1,
            AppError::Core(CoreError::InvalidArgument(_)) => 1,
            AppError::Core(_) => 2,
            AppError::Io { .. } | AppError::Parse { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
