//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("point lies outside the function domain")]
    OutOfDomain,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("arrangement cell count exceeded the cap of {cap}")]
    CellExplosion { cap: usize },

    #[error("region count exceeded the cap of {cap}")]
    RegionExplosion { cap: usize },

    #[error("no region interior meets the interior of cell {cell}")]
    LabelNotFound { cell: usize },

    #[error("decomposition on the fold-arrangement partition came back infeasible; this indicates a tolerance or geometry bug")]
    NovelInfeasible,

    #[error("internal consistency check failed: {0}")]
    Internal(String),

    #[error("unbounded domain: {0}")]
    UnboundedDomain(String),

    #[error("iteration cap hit without convergence: {0}")]
    NoConvergence(String),

    #[error("degenerate critical region at parameter {0:?}")]
    DegenerateRegion(Vec<f64>),

    #[error("horizon must be at least 1")]
    InvalidHorizon,

    #[error("PWA validation failed: {0}")]
    ValidationFailed(String),

    #[error("the decomposition does not certify a convex domain; max-minus-max form needs one")]
    NonConvexDomain,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
