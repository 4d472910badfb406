use thiserror::Error;

use crate::problem::PrimalDualState;

pub type Result<T> = std::result::Result<T, SnapError>;

#[derive(Debug, Error)]
pub enum SnapError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("column {0} has zero variance after centering")]
    ZeroVarianceColumn(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("response is orthogonal to every column (X'y = 0)")]
    DegenerateResponse,

    #[error("noise level too large: 10*delta_u = {threshold:.6e} >= lambda_1 = {lambda1:.6e}")]
    NoiseTooLarge { threshold: f64, lambda1: f64 },

    #[error("dense Newton system is singular")]
    SingularSystem,

    #[error("conjugate gradient breakdown after {iterations} iterations (curvature {curvature:.3e})")]
    CgBreakdown { iterations: usize, curvature: f64 },

    #[error("active set of size {size} exceeds the sparsity cap {cap}")]
    ActiveSetTooLarge { size: usize, cap: usize },

    #[error("matrix of dimension {dim} exceeds the verification limit {limit}")]
    MatrixTooLarge { dim: usize, limit: usize },

    #[error("knot {0} has zero residual sum of squares")]
    ZeroResidual(usize),

    #[error("true coefficient vector is zero")]
    ZeroTruth,

    #[error("path is empty")]
    EmptyPath,

    #[error("SNA failed at iteration {iteration}: {source}")]
    Sna {
        iteration: usize,
        state: Box<PrimalDualState>,
        #[source]
        source: Box<SnapError>,
    },

    #[error("knot {knot}: {source}")]
    Knot {
        knot: usize,
        #[source]
        source: Box<SnapError>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl SnapError {
    /// Strips `Knot` / `Sna` wrappers.
    pub fn root(&self) -> &SnapError {
        match self {
            SnapError::Knot { source, .. } | SnapError::Sna { source, .. } => source.root(),
            other => other,
        }
    }
}
