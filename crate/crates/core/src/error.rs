use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("derivative of the Matern correlation requires nu > 1, got nu = {nu}")]
    UnsupportedSmoothness { nu: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "matrix is not positive definite even with jitter {jitter:e}; \
         largest off-diagonal violation |a_ij| - sqrt(a_ii a_jj) = {violation:e} at ({row}, {col})"
    )]
    Singular {
        jitter: f64,
        violation: f64,
        row: usize,
        col: usize,
    },

    #[error("matrix is not symmetric: |a_ij - a_ji| = {0:e}")]
    NotSymmetric(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("relative RMSE undefined: truth[{index}] is zero; use the absolute RMSE instead")]
    MetricUndefined { index: usize },

    #[error("training diverged at every epoch (non-finite loss); try a smaller learning rate")]
    Diverged,

    #[error("parse error: {0}")]
    Parse(String),
}
