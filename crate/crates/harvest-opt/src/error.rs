use thiserror::Error;

/// Errors produced by model construction, audits, solvers, and simulation.
#[derive(Debug, Clone, Error)]
pub enum HarvestError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("x = {x} is outside the state interval (0, {upper})")]
    OutOfDomain { x: f64, upper: f64 },

    #[error("model assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),
}

/// Coarse category used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: parameters, config keys, domains.
    Config,
    /// The model fails a standing assumption.
    Assumption,
    /// A numerical procedure did not converge or produced non-finite values.
    Numeric,
}

impl HarvestError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            HarvestError::InvalidParameter { .. }
            | HarvestError::OutOfDomain { .. }
            | HarvestError::Config(_) => ErrorCategory::Config,
            HarvestError::AssumptionViolation(_) => ErrorCategory::Assumption,
            HarvestError::Numeric(_) | HarvestError::NoBracket { .. } => ErrorCategory::Numeric,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarvestError>;
