use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the simulator, solvers and trainers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("constraint violation: {0}")]
    ConstraintViolation(String),
    #[error("singular least-squares fit: {0}")]
    SingularFit(String),
    #[error("division by zero: {0}")]
    DivisionByZero(String),
    #[error("parse error in {source_name} at line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty feasible control set at state {0}")]
    EmptyControlSet(String),
    #[error("training diverged: {0}")]
    TrainingDiverged(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit status: 2 for bad data or files, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularFit(_)
            | Error::DivisionByZero(_)
            | Error::TrainingDiverged(_)
            | Error::EmptyControlSet(_)
            | Error::ConstraintViolation(_)
            | Error::UndefinedMetric(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
