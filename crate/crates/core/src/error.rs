use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-physical photon statistics: P(1)={p1}, P(2)={p2} (need P(2) < 1 - P(1))")]
    NonPhysical { p1: f64, p2: f64 },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config is missing required key `{0}`")]
    MissingKey(String),

    #[error("bad magic bytes {found:?} (expected \"AHSP\")")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported format version {found} (this build reads version {expected})")]
    VersionMismatch { found: u16, expected: u16 },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("timestamps are not sorted ascending at index {index}")]
    Unsorted { index: usize },

    #[error("no accepted triggers (n_t = 0)")]
    NoTriggers,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("singular inversion system (determinant {det:e})")]
    Singular { det: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("histogram range must satisfy n_max >= 1")]
    InvalidRange,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
