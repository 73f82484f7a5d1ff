use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}:{line}: {reason}", path.display())]
    Malformed { path: PathBuf, line: usize, reason: String },
    #[error("cannot read {}: {source}", path.display())]
    Input { path: PathBuf, source: std::io::Error },
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(neighborly::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<neighborly::Error> for CliError {
    fn from(e: neighborly::Error) -> Self {
        match e {
            neighborly::Error::Infeasible(msg) => CliError::Infeasible(msg),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Malformed { .. } | CliError::Input { .. } => 2,
            CliError::Infeasible(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
