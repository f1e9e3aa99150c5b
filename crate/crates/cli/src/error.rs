use thiserror::Error;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, Clone, Error)]
pub enum CliError {
    /// Bad flags, bad config, unreadable inputs. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Divergence, non-finite values, failed numerical checks. Exit code 3.
    #[error("{0}")]
    Numerical(String),
    /// Anything else, e.g. an output file that cannot be written. Exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<symile_core::Error> for CliError {
    fn from(e: symile_core::Error) -> Self {
        use symile_core::Error as E;
        if e.is_numerical() {
            return CliError::Numerical(e.to_string());
        }
        match e {
            E::Io(_) => CliError::Runtime(e.to_string()),
            E::DegenerateInput(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn write_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

pub(crate) fn read_err(path: &std::path::Path, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("cannot read {}: {e}", path.display()))
}
