use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("rate {rate} is outside the {kind} parameter domain")]
    Domain { rate: f64, kind: &'static str },

    #[error("invalid edge value {value} for {kind} emission")]
    EdgeValue { value: f64, kind: &'static str },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid support matrix: {0}")]
    Support(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("invalid network: {0}")]
    Network(String),

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("{0}")]
    Metric(String),

    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
