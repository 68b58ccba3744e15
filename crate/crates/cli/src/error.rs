use henon_skew_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The config does not match the schema. `line` is 0 when the problem is
    /// not tied to one line.
    #[error("config error{}: {message}", if *.line > 0 { format!(" (line {})", .line) } else { String::new() })]
    Config { line: usize, message: String },
    /// The config is well formed but describes an invalid family or base.
    #[error("validation error: {0}")]
    Validation(String),
    /// The experiment itself failed.
    #[error("experiment error: {0}")]
    Experiment(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(line: usize, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            message: message.into(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Validation(_) => 3,
            CliError::Experiment(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}
