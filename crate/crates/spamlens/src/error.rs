use std::path::{Path, PathBuf};

/// Failures of the command-line pipeline, grouped by exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    /// Bad flags, unknown names or hyperparameters.
    #[error("usage: {0}")]
    Usage(String),
    /// Unreadable or invalid input, always naming the file.
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data { .. } => 2,
            AppError::Internal(_) => 3,
        }
    }

    pub fn data(path: impl AsRef<Path>, message: impl ToString) -> Self {
        AppError::Data {
            path: path.as_ref().to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Classifies a core error raised while processing `path`.
    pub fn from_core(path: impl AsRef<Path>, e: spamlens_core::error::Error) -> Self {
        use spamlens_core::error::Error as E;
        match e {
            E::UnknownHyperparameter { .. } | E::InvalidHyperparameter { .. } | E::UnknownName { .. } => {
                AppError::Usage(e.to_string())
            }
            other => AppError::data(path, other),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
