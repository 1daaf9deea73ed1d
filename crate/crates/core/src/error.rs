use thiserror::Error;

/// Errors raised by the Kendall random walk library.
#[derive(Debug, Error)]
pub enum KendallError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("Williamson inversion produced {value}, outside [0, 1]: input is not a valid transform")]
    Inversion { value: f64 },

    #[error("query too large for enumeration: k = {k} exceeds {limit}; use the dynamic-programming evaluator")]
    Size { k: usize, limit: usize },

    #[error("root search failed: {0}")]
    Search(String),

    #[error("cannot classify tail regime: {0}")]
    Classification(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, KendallError>;
