use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("rank deficiency: {0}")]
    Rank(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("unsupported architecture: {0}")]
    UnsupportedArchitecture(String),

    #[error("unsupported outcome: {0}")]
    UnsupportedOutcome(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("{failed} of {total} permutation replicates diverged (limit is 5%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by a network failing to train.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::TooManyFailures { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
