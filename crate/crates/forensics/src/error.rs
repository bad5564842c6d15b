use crate::stuffing::StuffingParams;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("station {station}: {message}")]
    Validation { station: String, message: String },

    #[error("duplicate station key {station}")]
    DuplicateKey { station: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer did not converge within {iterations} iterations (best objective {objective})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        best: StuffingParams,
    },

    #[error("test `{test}` failed: {source}")]
    TestFailed {
        test: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
