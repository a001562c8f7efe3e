use thiserror::Error;

/// Error type shared by all modules of the crate.
#[derive(Debug, Clone, Error)]
pub enum SabrError {
    /// An argument is outside the domain of the operation.
    #[error("invalid input: {message}")]
    InvalidInput { message: String },

    /// A transcendental-equation solver failed to reach its residual target.
    #[error("solver failure: {message}")]
    SolverFailure { message: String },

    /// The 2D rate-function minimizer did not converge.
    #[error("optimizer did not converge: {message}")]
    NoConvergence { message: String },

    /// A price passed to the implied-volatility inversion violates
    /// no-arbitrage bounds.
    #[error("arbitrage bounds violated: {message}")]
    ArbitrageBounds { message: String },
}

pub type Result<T> = std::result::Result<T, SabrError>;

impl SabrError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        SabrError::InvalidInput {
            message: message.into(),
        }
    }
}

pub(crate) fn validate_positive(value: f64, name: &str) -> Result<()> {
    if value <= 0.0 || !value.is_finite() {
        return Err(SabrError::invalid(format!(
            "{name} must be positive and finite, got {value}"
        )));
    }
    Ok(())
}

pub(crate) fn validate_finite(value: f64, name: &str) -> Result<()> {
    if !value.is_finite() {
        return Err(SabrError::invalid(format!(
            "{name} must be finite, got {value}"
        )));
    }
    Ok(())
}
