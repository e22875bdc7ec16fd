//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The softmax normalizer collapsed to (sub-)machine scale. Only
    /// reachable through overflow/underflow of the kernel logits.
    #[error("degenerate kernel normalizer at position {position}")]
    DegenerateNormalizer { position: usize },

    /// A forward state left the representable range; `layer` names the
    /// first offending layer (or grid index for the continuous solver).
    #[error("numerical overflow: non-finite state at layer {layer}")]
    Overflow { layer: usize },

    #[error("solver stalled: per-step fixed point did not contract at t = {t}")]
    SolverStall { t: f64 },

    #[error("numerical overflow: non-finite gradient")]
    GradientOverflow,

    #[error("training diverged at epoch {epoch} (objective {objective:e})")]
    TrainingDiverged { epoch: usize, objective: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
