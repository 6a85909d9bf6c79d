use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{phase}: {source}")]
    Model {
        phase: &'static str,
        #[source]
        source: uqcal::Error,
    },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data { .. } | CliError::Io { .. } => 3,
            CliError::Model { source, .. } => match source.root() {
                e if e.is_numerical() => 4,
                uqcal::Error::InvalidParameter { .. } | uqcal::Error::Precondition(_) => 2,
                uqcal::Error::NotEnumerable => 4,
                _ => 3,
            },
        }
    }
}

/// Attaches a study phase label to library errors.
pub trait Phase<T> {
    fn phase(self, phase: &'static str) -> Result<T, CliError>;
}

impl<T> Phase<T> for uqcal::Result<T> {
    fn phase(self, phase: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Model { phase, source })
    }
}
