use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("--{flag}: {message}")]
    Usage { flag: &'static str, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] kottler::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(flag: &'static str, message: impl Into<String>) -> Self {
        CliError::Usage {
            flag,
            message: message.into(),
        }
    }

    /// Precondition and I/O failures exit with 2; numerical failures are
    /// reported as error verdicts.
    pub fn is_usage(&self) -> bool {
        use kottler::Error as E;
        match self {
            CliError::Usage { .. } | CliError::Config(_) | CliError::Io { .. } => true,
            CliError::Core(e) => matches!(
                e,
                E::UnsupportedDimension(_)
                    | E::MassOutOfRange { .. }
                    | E::NearExtremal { .. }
                    | E::OutOfRange { .. }
                    | E::EndpointLimit { .. }
                    | E::UnknownName(_)
                    | E::Parse(_)
            ),
        }
    }
}
