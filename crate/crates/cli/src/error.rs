use jointspace::adversarial::TrainFailure;
use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<jointspace::Error> for CliError {
    fn from(e: jointspace::Error) -> Self {
        use jointspace::Error as E;
        match e {
            E::Config(msg) => CliError::Config(msg),
            E::Param(_) => CliError::Config(e.to_string()),
            E::Numerical(msg) => CliError::Numerical(msg),
            E::Shape(_) | E::Parse { .. } | E::Io { .. } => CliError::Data(e.to_string()),
        }
    }
}

impl From<TrainFailure> for CliError {
    fn from(f: TrainFailure) -> Self {
        match f.error {
            jointspace::Error::Numerical(_) => CliError::Numerical(f.to_string()),
            other => other.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
