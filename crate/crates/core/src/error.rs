use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("noise bound violated: rho_plus + rho_minus = {sum} exceeds declared bound {bound}")]
    NoiseBoundViolation { sum: f64, bound: f64 },

    #[error("point {0:?} is not in the finite domain")]
    UnknownPoint(Vec<f64>),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("loss `{0}` is not convex; use the finite 0-1 solver instead")]
    NonConvexLoss(&'static str),

    #[error("loss `{0}` has no bounded range on this hypothesis space")]
    UnboundedLoss(&'static str),

    #[error("exact enumeration needs n <= {max}, got {n}")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("estimator returned {0}, expected -1 or +1")]
    NonBinaryEstimate(i64),

    #[error("missing input `{0}`")]
    MissingInput(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Keeps the path on I/O failures inside the csv crate.
pub(crate) fn csv_io(e: csv::Error, path: &std::path::Path) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}
