use thiserror::Error;

/// Failures of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("solver did not converge: {0}")]
    Convergence(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<fiscal_tiebout::Error> for CliError {
    fn from(e: fiscal_tiebout::Error) -> Self {
        use fiscal_tiebout::Error as E;
        match e {
            E::InvalidScenario(_) | E::RateRequired { .. } | E::MassMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Convergence(e.to_string()),
        }
    }
}

impl From<fiscal_tiebout_rdd::Error> for CliError {
    fn from(e: fiscal_tiebout_rdd::Error) -> Self {
        use fiscal_tiebout_rdd::Error as E;
        match e {
            E::InvalidParams(_) | E::InvalidPanel(_) | E::InsufficientData { .. } => {
                CliError::Validation(e.to_string())
            }
            E::SingularDesign => CliError::Convergence(e.to_string()),
            E::Csv(ref c) if !c.is_io_error() => CliError::Validation(e.to_string()),
            E::Io(_) | E::Csv(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
