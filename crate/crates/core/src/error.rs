use thiserror::Error;

/// Errors raised by the laboratory's numerical and Monte Carlo routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A truncated series cannot meet its tail tolerance at the requested argument.
    #[error("precision error: {0}")]
    Precision(String),

    #[error("convergence error: {message} (relative gap {gap:e})")]
    Convergence { message: String, gap: f64 },

    #[error("degenerate covariance between {first} and {second}: determinant {determinant:e}")]
    Degeneracy {
        first: String,
        second: String,
        determinant: f64,
    },

    #[error("integration failed at step {step}: {message}")]
    Integration { step: usize, message: String },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("state error: {0}")]
    State(String),

    #[error("sampler efficiency error: {0}")]
    Efficiency(String),

    #[error("approximation error: {0}")]
    Approximation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Coarse failure class used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Precision,
    Convergence,
    Runtime,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Precision => "precision",
            ErrorCategory::Convergence => "convergence",
            ErrorCategory::Runtime => "runtime",
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Domain(_) | Error::Configuration(_) => ErrorCategory::Config,
            Error::Precision(_) | Error::Degeneracy { .. } => ErrorCategory::Precision,
            Error::Convergence { .. } | Error::Approximation(_) | Error::Efficiency(_) => {
                ErrorCategory::Convergence
            }
            Error::Integration { .. } | Error::State(_) | Error::Io(_) => ErrorCategory::Runtime,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
