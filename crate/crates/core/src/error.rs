use thiserror::Error;

/// Errors raised by the numeric layers of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is rank deficient (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    RankDeficient { sigma_min: f64, sigma_max: f64 },

    #[error("matrix is not on the Stiefel manifold (feasibility error {0:e})")]
    NotFeasible(f64),

    #[error("singular value decomposition did not converge")]
    SvdFailed,

    #[error("Householder vector must be nonzero")]
    ZeroVector,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Barzilai-Borwein memory is empty")]
    EmptyBbMemory,

    #[error("instance carries no reference eigenvalues")]
    MissingOracle,

    #[error("instance serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
