use thiserror::Error;

/// Failures grouped by exit code: violated preconditions exit 3, resource
/// and computation failures exit 4, oracle mismatches exit 5. Argument
/// parse errors exit 2 through clap before any of these can arise.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 3,
            CliError::Resource(_) => 4,
            CliError::Mismatch(_) => 5,
        }
    }
}
