use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// The matrix is empty, has inconsistent dimensions, or contains
    /// non-finite entries.
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    /// The input admits no meaningful decomposition (e.g. an all-zero
    /// matrix has no positive singular values). Callers typically fall
    /// back to the uniform feature distribution.
    #[error("degenerate matrix: {0}")]
    DegenerateMatrix(String),

    /// A parameter combination that cannot be executed (k > d, zero
    /// trees, bad split fraction, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A dataset or model file failed to parse; the message names the
    /// offending location where possible.
    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
