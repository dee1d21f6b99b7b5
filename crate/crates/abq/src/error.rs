use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: checkpoint integrity check failed: {message}")]
    Integrity { path: PathBuf, message: String },
    #[error("checkpoint shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Core(#[from] abq_core::Error),
    #[error("seed {seed}: {source}")]
    Run {
        seed: u64,
        #[source]
        source: abq_core::Error,
    },
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T>;
}

impl<T> IoContext<T> for io::Result<T> {
    fn at(self, path: impl Into<PathBuf>) -> Result<T> {
        self.map_err(|source| HarnessError::Io {
            path: path.into(),
            source,
        })
    }
}
