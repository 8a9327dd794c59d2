use thiserror::Error;

/// Failures surfaced by the command line, mapped onto exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed files, flags or configuration.
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] svcal::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
