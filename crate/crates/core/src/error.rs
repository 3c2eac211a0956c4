use thiserror::Error;

/// Errors surfaced by operator, channel, and protocol routines.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds {tol:.1e})")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    #[error("matrix is not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("matrix is not column-stochastic: {0}")]
    NotStochastic(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("empty data: {0}")]
    EmptyData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decay fit failed: {reason}")]
    Fit {
        reason: String,
        xs: Vec<usize>,
        ys: Vec<f64>,
    },

    #[error("eigendecomposition did not converge")]
    EigenFailure,
}

pub type Result<T> = std::result::Result<T, Error>;
