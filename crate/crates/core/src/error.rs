use thiserror::Error;

/// Errors raised by the model, estimators and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem instance: {0}")]
    InvalidInstance(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("unknown problem preset `{0}`")]
    UnknownProblem(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
