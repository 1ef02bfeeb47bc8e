use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("point is not strictly interior (margin {margin:e})")]
    NotInterior { margin: f64 },

    #[error("missing vertex representation")]
    MissingVertices,

    #[error("singular matrix (|det| = {0:e})")]
    SingularMatrix(f64),

    #[error("ill-conditioned covariance (condition number {0:e})")]
    IllConditioned(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("linear program: {0}")]
    Lp(#[from] crate::lp::LpError),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
