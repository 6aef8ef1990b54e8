use thiserror::Error;

/// Failure of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input files or configuration. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Inputs were readable but the analysis cannot be carried out. Exit code 2.
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl From<rfm_pyramid::Error> for CliError {
    fn from(e: rfm_pyramid::Error) -> Self {
        let msg = match &e {
            rfm_pyramid::Error::Rows(rows) => rows
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("\n"),
            other => other.to_string(),
        };
        if e.is_validation() {
            CliError::Validation(msg)
        } else {
            CliError::Analysis(msg)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
