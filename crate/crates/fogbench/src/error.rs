use std::io;
use std::path::PathBuf;

use fogbench_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid argument: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed file: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{failed} of {total} samples could not be processed")]
    SampleFailures { failed: usize, total: usize },
}

impl CliError {
    /// 0 is success; 2 validation; 3 numeric or identifiability; 1 for IO
    /// and file-format problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Core(e) => match e {
                CoreError::Config(_)
                | CoreError::Domain { .. }
                | CoreError::TooFewScenes { .. }
                | CoreError::Shape(_)
                | CoreError::DimensionMismatch { .. } => 2,
                _ => 3,
            },
            CliError::SampleFailures { .. } => 3,
            CliError::Io { .. } | CliError::Format { .. } | CliError::Image { .. } | CliError::Json { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> CliError {
        CliError::Format { path: path.into(), reason: reason.into() }
    }
}
