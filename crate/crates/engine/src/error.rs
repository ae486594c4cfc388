use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {detail}")]
    BadValue { key: String, detail: String },
    #[error("config line {line}: {detail}")]
    ConfigSyntax { line: usize, detail: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: gazemouse_core::Error,
    },
    #[error("telemetry: {0}")]
    Telemetry(String),
    #[error(transparent)]
    Core(#[from] gazemouse_core::Error),
}

impl EngineError {
    /// Process exit status for this error: 2 for unreadable or malformed
    /// input data, 1 for everything the operator can fix on the command line.
    pub fn exit_code(&self) -> i32 {
        use gazemouse_core::Error as C;
        match self {
            EngineError::Io { .. } | EngineError::Input { .. } => 2,
            EngineError::Core(
                C::Io { .. } | C::Stream(_) | C::Parse { .. } | C::Schema { .. } | C::InvalidImage(_),
            ) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> EngineError {
    EngineError::Io {
        path: path.into(),
        source,
    }
}
