//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in a computation, a fit, or a CLI run.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The parameters describe a physical regime the model does not cover.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// A least-squares fit could not be carried out.
    #[error("fit error: {0}")]
    Fit(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failed at t = {t:.6e} s: {reason}")]
    Integration { t: f64, reason: String },

    /// Too few oscillations after the resonance crossing to characterise ringing.
    #[error("insufficient ringing: {crossings} post-resonance zero crossings (need at least {required})")]
    InsufficientRinging { crossings: usize, required: usize },

    /// A root search did not bracket the requested value.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// Configuration rejected, qualified by the JSON path of the offending field.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// Input data (CSV, JSON) did not match the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front-end.
    ///
    /// 2 for configuration problems, 3 for domain or physics failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Io { .. } => 4,
            _ => 3,
        }
    }
}

/// Fails with a domain error unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Fails with a domain error unless `value` is finite and non-negative.
pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be non-negative and finite, got {value}"
        )))
    }
}
