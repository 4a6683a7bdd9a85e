use thiserror::Error;

use crate::kernels::DefinitenessVerdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("grid would hold {count} points, cap is {cap}")]
    GridCapExceeded { count: usize, cap: usize },

    #[error("invalid kernel matrix: {0}")]
    InvalidKernel(String),

    #[error("symmetric eigensolver did not converge on a {0}x{0} matrix")]
    EigenNoConvergence(usize),

    #[error("negative entry {value} at ({row}, {col}); power transform needs nonnegative kernels")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("kernel fails the definiteness requirement: {0}")]
    NotDefinite(Box<DefinitenessVerdict>),

    #[error("difference of points `{0}` and `{1}` is not in the function support")]
    MissingDifference(String, String),

    #[error("map cannot be evaluated at {0}")]
    Evaluation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("scale family: {0}")]
    ScaleFamily(String),

    #[error("{0}")]
    Input(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
