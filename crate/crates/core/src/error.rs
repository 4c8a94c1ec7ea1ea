use thiserror::Error;

use crate::data::Finding;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset failed validation: {}", summarize(.0))]
    Validation(Vec<Finding>),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("continuation-ratio stage {stage} is degenerate: {message}")]
    StageDegenerate { stage: usize, message: String },

    #[error("model did not converge: {0}")]
    NotConverged(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("positivity violated: arm {arm} has no units")]
    Positivity { arm: usize },

    #[error("bootstrap unstable: {0}")]
    Instability(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("too many failed replicates: {failed} of {total}; first failure: {first}")]
    ReplicateFailures { failed: usize, total: usize, first: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn summarize(findings: &[Finding]) -> String {
    findings
        .iter()
        .map(|f| f.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
