use std::path::Path;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// An I/O failure on a named file.
    #[error("{}: {message}", path.display())]
    File {
        path: std::path::PathBuf,
        message: String,
    },
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
    #[error("malformed document: {0}")]
    Format(String),
    #[error(transparent)]
    Strategy(#[from] crate::strategies::StrategyError),
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("server error: {0}")]
    Server(String),
}

impl Error {
    pub fn file(path: &Path, err: std::io::Error) -> Self {
        Error::File {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}
