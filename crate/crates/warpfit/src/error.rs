use std::path::{Path, PathBuf};

use thiserror::Error;
use warpfit_core::data::DataError;
use warpfit_core::discriminate::DiscriminateError;
use warpfit_core::model::ModelError;

/// Exit status for invalid input.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for a numerical failure during fitting.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse { path: PathBuf, line: Option<u64>, message: String },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Discriminate(#[from] DiscriminateError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        Error::Schema { path: path.to_path_buf(), message: message.into() }
    }

    pub fn is_numerical(&self) -> bool {
        fn model(e: &ModelError) -> bool {
            matches!(e, ModelError::Numerical(_) | ModelError::AllFlagged(_))
        }
        match self {
            Error::Model(e) => model(e),
            Error::Data(DataError::Model(e)) => model(e),
            Error::Discriminate(DiscriminateError::Model(e)) => model(e),
            Error::Discriminate(DiscriminateError::Numerical(_) | DiscriminateError::Separation { .. }) => true,
            _ => false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_VALIDATION
        }
    }
}
