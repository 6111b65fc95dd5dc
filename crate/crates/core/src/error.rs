//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed configuration or unparseable numeric literal.
    #[error("parse error: {0}")]
    Parse(String),

    /// Geometric validation failed: overlapping cylinders, missing or
    /// inconsistent separation gap, non-orthogonal rotation.
    #[error("geometry violation: {0}")]
    Geometry(String),

    /// An operation that needs dependent contraction ratios was invoked on
    /// a system whose ratios are independent at the detection tolerance.
    #[error("dependent contraction ratios required: {0}")]
    DependenceRequired(String),

    /// A computation would exceed its iteration/size budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Precondition violated by the caller.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Ratio-structure detection found several inconsistent integer
    /// structures fitting within the requested tolerance.
    #[error("tolerance too coarse: {0}")]
    AmbiguousTolerance(String),

    /// Coincident points make the Riesz energy infinite.
    #[error("infinite energy: {0}")]
    InfiniteEnergy(String),

    /// Degenerate renewal system (f_0 = 1, zero mean, periodic refusal).
    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// Invariant that should be unreachable for validated inputs.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
