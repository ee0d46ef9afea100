use thiserror::Error;

use crate::measurement::OutcomeId;

/// Errors raised across the reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least {min}, got {found}")]
    DimensionTooSmall { min: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid point ({re}, {im}) has coherent truncation weight {weight:.3e} above {limit:.1e} at dim {dim}")]
    TruncationTooLarge {
        re: f64,
        im: f64,
        weight: f64,
        limit: f64,
        dim: usize,
    },

    #[error("effect {id} is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NegativeEffect { id: OutcomeId, min_eigenvalue: f64 },

    #[error("effects sum beyond the identity (max eigenvalue {max_eigenvalue:.12})")]
    Overcomplete { max_eigenvalue: f64 },

    #[error("outcome {0} is not part of the measurement")]
    UnknownOutcome(OutcomeId),

    #[error("duplicate outcome id {0}")]
    DuplicateOutcome(OutcomeId),

    #[error("effect {id} yields probability {probability:.3e}")]
    NegativeProbability { id: OutcomeId, probability: f64 },

    #[error("auxiliary weight {index} must be positive and finite, got {value}")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("measurement effects are not mutually orthogonal rank-one projectors")]
    NonOrthogonalPom,

    #[error("unsupported measurement: {0}")]
    UnsupportedPom(String),

    #[error("residual probability mass {residual:.3e} exceeds {limit:.1e}; the measurement is too incomplete to sample")]
    ResidualMassTooLarge { residual: f64, limit: f64 },

    #[error("{excluded} of {total} estimations failed to converge (limit 5%)")]
    TooManyExclusions { excluded: usize, total: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
