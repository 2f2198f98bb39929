use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic {found:?}, expected \"ADTN\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported ADTN version {0}")]
    UnsupportedVersion(u8),

    #[error("unsupported dtype code {0}")]
    UnsupportedDtype(u8),

    #[error("truncated tensor: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("tensor dims overflow the addressable size")]
    DimOverflow,

    #[error("invalid tensor shape: {0}")]
    InvalidShape(String),

    #[error("png decode error in {path}: {message}")]
    Png { path: PathBuf, message: String },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient points: need {needed}, have {have}")]
    InsufficientPoints { needed: usize, have: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("missing exported features: {0}")]
    MissingFeatures(String),

    #[error("invalid bank metadata: {0}")]
    BankMeta(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
