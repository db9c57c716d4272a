use thiserror::Error;

/// Errors raised by the solver, the refinement driver and the exponent fits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is out of range; `key` names the offending entry.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// The requested model/parameter combination cannot be evaluated exactly.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Input data outside the domain of a fit (non-positive values, too few points).
    #[error("domain error: {0}")]
    Domain(String),

    /// The TOL schedule was exhausted without reaching the requested agreement.
    #[error("calibration failed: no tolerance reached {target_digits} matching digits")]
    Calibration { target_digits: u32 },
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
