use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the cap of {cap} for {what}")]
    TooLarge {
        what: &'static str,
        dim: usize,
        cap: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("absorbing state {state}: every neighbor weight underflows")]
    AbsorbingState { state: String },

    #[error("empty neighbor set")]
    EmptyNeighborhood,

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("invalid ladder: {0}")]
    InvalidLadder(String),

    #[error("nonpositive or non-finite weight {0}")]
    InvalidWeight(f64),

    #[error("estimator has no samples")]
    EmptyAccumulator,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
