use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid has {nodes} nodes, at least {min} are required")]
    GridTooSmall { nodes: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at node {index} (t = {t})")]
    NonFinite { index: usize, t: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory has no samples")]
    EmptyTrajectory,
    #[error("{0}")]
    OutOfRange(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("mean curvature {h} <= 0 at node {index}")]
    NotMeanConvex { index: usize, h: f64 },
    #[error("profile is not convex at node {index} (u'' = {d2u})")]
    NotConvex { index: usize, d2u: f64 },
    #[error("shooting bracket [{lo}, {hi}] does not enclose the target slope {target}")]
    BracketNotFound { lo: f64, hi: f64, target: f64 },
    #[error("residual {residual:e} exceeds certification tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("grids or sample times do not match: {0}")]
    Mismatch(String),
}
