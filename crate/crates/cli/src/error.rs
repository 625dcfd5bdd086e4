use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] keldysh_core::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("plotting failed: {0}")]
    Plot(String),

    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    /// 2 for invalid input, 1 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_invalid_input() => 2,
            CliError::Core(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Plot(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
