use thiserror::Error;

use crate::sps::Norm;

pub type Result<T> = std::result::Result<T, SpsError>;

#[derive(Debug, Error)]
pub enum SpsError {
    /// A Cholesky pivot fell below the positive-definiteness tolerance,
    /// i.e. the outer-product matrix is (numerically) singular.
    #[error("singular design: pivot {pivot:.3e} below tolerance {tol:.3e}")]
    SingularDesign { pivot: f64, tol: f64 },

    #[error("degenerate sample: n = {n} must exceed d = {d}")]
    DegenerateSample { n: usize, d: usize },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("ellipsoidal over-bound is only available for the L2 norm, not {0}")]
    NormUnsupported(Norm),

    #[error("region is unbounded")]
    InfiniteRegion,

    #[error("center point is not a member of the region")]
    CenterExcluded,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SpsError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SpsError::BadConfig(msg.into())
    }
}
