use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rejected value {value} at node {node}: only finite reals and -inf are allowed")]
    RejectedValue { node: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("slice or ball out of range: {0}")]
    OutOfRange(String),

    #[error("matrix is not Hermitian: deviation {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("nonsmooth point at {point:?}: {reason}")]
    NonSmooth { point: Vec<f64>, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
