use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] aerosec_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}:{line}: {msg}", path.display())]
    Csv { path: PathBuf, line: u64, msg: String },
    #[error("invalid preset: {0}")]
    Preset(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 0 success, 1 validation error, 2 infeasible scenario, 3 internal
    /// assertion.
    pub fn exit_code(&self) -> i32 {
        use aerosec_core::Error as E;
        match self {
            AppError::Core(E::Validation(_)) => 1,
            AppError::Core(E::Infeasible(_)) => 2,
            AppError::Core(_) | AppError::Pool(_) => 3,
            AppError::Io { .. } | AppError::Format { .. } | AppError::Csv { .. } | AppError::Preset(_) => 1,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
