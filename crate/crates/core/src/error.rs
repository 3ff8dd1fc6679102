use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("point component {index} = {value} lies outside [-1, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("sparse grid with {requested} nodes exceeds the node budget of {budget}")]
    BudgetExceeded { requested: u64, budget: u64 },

    #[error("eigen-solver failure: {0}")]
    EigenSolver(String),

    #[error("covariance is not positive semi-definite: eigenvalue {value:e} below -{tolerance:e}")]
    NotPositiveSemiDefinite { value: f64, tolerance: f64 },

    #[error("source is not compatible with no-flow boundaries: net rate {net:e}")]
    IncompatibleSource { net: f64 },

    #[error("singular or ill-conditioned system at row {row}: pivot {pivot:e} (largest diagonal {scale:e})")]
    SingularSystem { row: usize, pivot: f64, scale: f64 },

    #[error("linear solve residual {residual:e} above tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("net boundary flux {net:e} through coarse edge {edge} is too small to normalise")]
    DegenerateBoundaryFlux { edge: usize, net: f64 },

    #[error("global velocity library has no entry for dimension {dim} at node {node}")]
    MissingLibraryEntry { dim: usize, node: f64 },

    #[error("no active dimension can be identified: all first-order variances vanish")]
    NoActiveDimension,

    #[error("Newton iteration did not converge after {halvings} time-step halvings (last update {last_update:e})")]
    NewtonDiverged { halvings: u32, last_update: f64 },

    #[error("saturation {value} in cell {cell} violates [0, 1]")]
    SaturationBounds { cell: usize, value: f64 },

    #[error("model evaluation failed at {theta:?}: {message}")]
    Evaluation { theta: Vec<f64>, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
