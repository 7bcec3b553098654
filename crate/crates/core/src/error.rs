use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("operator entries must be finite (found {0} at {1:?})")]
    NonFinite(String, (usize, usize)),

    #[error("operator must be square with dim >= 1 (got {rows}x{cols})")]
    Shape { rows: usize, cols: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unitarity defect {defect:e} exceeds tolerance {tol:e}")]
    NotUnitary { defect: f64, tol: f64 },

    #[error("spectral decomposition failed: {0}")]
    Spectral(String),

    #[error("circle function is not finite at eigenangle {angle}")]
    Evaluation { angle: f64 },

    #[error("invalid branch function: {0}")]
    InvalidBranch(String),

    #[error("invalid root order {0}")]
    InvalidOrder(u32),

    #[error("mixer block {cluster}: {reason}")]
    Mixer { cluster: usize, reason: String },

    #[error("invalid compact function: {0}")]
    InvalidFunction(String),

    #[error("support exceeds tower depth: support exponent {support} > level {level}")]
    SupportExceedsDepth { support: u32, level: usize },

    #[error("tower level {level} out of range (depth {depth})")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("tower depth {0} out of range 1..=48")]
    DepthOutOfRange(usize),

    #[error("invalid torus parameters: {0}")]
    InvalidTorus(String),

    #[error("dimension {dim} exceeds configured maximum {max}")]
    DimensionLimit { dim: usize, max: usize },

    #[error("word budget exceeded: {needed} > {budget}")]
    WordBudgetExceeded { needed: usize, budget: usize },

    #[error("sampling budget exceeded: {needed} > {budget}")]
    SampleBudgetExceeded { needed: usize, budget: usize },

    #[error("{what} = {value:e} exceeds tolerance {tol:e}")]
    ToleranceExceeded { what: String, value: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
