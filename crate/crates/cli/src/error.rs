use gdtc::Error as CoreError;
use thiserror::Error;

/// Failure of a CLI operation, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("parameter-domain error at {context}: {source}")]
    Domain { context: String, source: CoreError },
    #[error("numerical invariant breach at {context}: {source}")]
    Invariant { context: String, source: CoreError },
    #[error("plot schema mismatch: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 config or schema, 3 parameter domain, 4 numerical invariant, 1 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Schema(_) => 2,
            CliError::Domain { .. } => 3,
            CliError::Invariant { .. } => 4,
            CliError::Io(_) => 1,
        }
    }

    /// Classifies a core error raised while simulating at `context`.
    pub fn from_core(context: impl Into<String>, err: CoreError) -> Self {
        let context = context.into();
        match err {
            CoreError::NotHermitian(_)
            | CoreError::NotAntiHermitian(_)
            | CoreError::NotUnitary(_)
            | CoreError::NegativeEigenvalue(_)
            | CoreError::Lapack { .. }
            | CoreError::Decomposition(_)
            | CoreError::InvariantBreach { .. } => CliError::Invariant { context, source: err },
            _ => CliError::Domain { context, source: err },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
