use thiserror::Error;

/// Errors produced by the numerical routines and file readers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:e}, max eigenvalue {max_eig:e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("matrix is not invertible: eigenvalue {eigenvalue:e} is below the threshold {threshold:e}")]
    NotInvertible { eigenvalue: f64, threshold: f64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
