use thiserror::Error;

/// Errors produced by simulation, training, and gradient checking.
#[derive(Debug, Error)]
pub enum SimError {
    /// A state variable left the representable range (NaN or infinity).
    #[error("numerical divergence: {0}")]
    NumericalDivergence(String),

    /// An API precondition was violated (shape mismatch, zero perturbation, ...).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// The requested learning-signal mode needs data that was not recorded.
    #[error("learning-signal mode unavailable: {0}")]
    ModeUnavailable(String),

    /// A spike rate that does not define a valid per-step Bernoulli probability.
    #[error("invalid rate: {0}")]
    InvalidRate(String),

    /// A configuration value outside its documented range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
