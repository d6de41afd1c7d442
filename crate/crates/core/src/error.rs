use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{operation} does not support {mechanism} mechanisms")]
    UnsupportedSpec {
        operation: &'static str,
        mechanism: &'static str,
    },

    /// A policy check refused the request (non-private mechanism, budget cap).
    #[error("refused: {0}")]
    Refused(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("usefulness bound not applicable: radius {radius:.4} does not exceed break point {break_point}")]
    BoundNotApplicable { radius: f64, break_point: f64 },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("query error: {0}")]
    Query(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidParameter(message.into())
}
