use std::path::PathBuf;
use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("ground truth is missing node {0}")]
    IncompleteGroundTruth(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("horizon estimate needs at least two events")]
    UndefinedEstimate,

    #[error("malformed cascade: {0}")]
    MalformedCascade(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("transmission trees are not available for this cascade set")]
    OracleUnavailable,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("rate fit failed: {0}")]
    FitFailure(String),

    #[error("graph generation failed: {0}")]
    GenerationFailure(String),

    #[error("modularity is undefined on a graph with zero total weight")]
    UndefinedModularity,

    #[error("mixing is undefined on a graph without edges")]
    UndefinedMixing,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
