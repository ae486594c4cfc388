use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by core operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("region {region:?} out of bounds for {width}x{height} image")]
    OutOfBounds {
        region: (usize, usize, usize, usize),
        width: usize,
        height: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("line {line}: parse error: {detail}")]
    Parse { line: usize, detail: String },

    #[error("line {line}: schema error: {detail}")]
    Schema { line: usize, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
