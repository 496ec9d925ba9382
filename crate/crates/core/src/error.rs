use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("alpha must exceed 3/2 + epsilon (alpha = {alpha}, epsilon = {epsilon})")]
    AlphaOutOfRegime { alpha: f64, epsilon: f64 },
    #[error("system extinct: no active particle")]
    Extinct,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid particle system: {0}")]
    InvalidSystem(String),
}
