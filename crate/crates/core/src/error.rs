use thiserror::Error;

/// Errors produced by the tail-risk library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The optimizer stopped without meeting its tolerance. Carries the best
    /// iterate `(gamma, sigma)` found so far.
    #[error("no convergence: {message} (best iterate gamma={best_gamma}, sigma={best_sigma})")]
    Convergence {
        message: String,
        best_gamma: f64,
        best_sigma: f64,
    },

    #[error("threshold selection failed: {0}")]
    SelectionFailed(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
