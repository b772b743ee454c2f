use heatsheet::ErrorCategory;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] heatsheet::Error),
    #[error("output: {0}")]
    Output(String),
    /// The verify suite ran but some checks failed.
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            CliError::Config(_) => ErrorCategory::Config,
            CliError::Core(e) => e.category(),
            CliError::Output(_) => ErrorCategory::Runtime,
            CliError::Verification(_) => ErrorCategory::Precision,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            ErrorCategory::Config => 2,
            ErrorCategory::Precision => 3,
            ErrorCategory::Convergence => 4,
            ErrorCategory::Runtime => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
