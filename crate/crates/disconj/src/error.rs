use std::path::PathBuf;

use disconj_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INPUT: i32 = 1;
    /// Not disconjugate, or a failed Green's function sign check.
    pub const NEGATIVE: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const INCONCLUSIVE: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> CliError {
        CliError::Input(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                // a coefficient that cannot be evaluated on [a, b] is a bad input
                CoreError::InvalidProblem(_) | CoreError::Coefficient { .. } => exit::INPUT,
                CoreError::NotDisconjugate { .. } => exit::NEGATIVE,
                CoreError::Inconclusive { .. } => exit::INCONCLUSIVE,
                CoreError::Integration { .. }
                | CoreError::AmbiguousZero { .. }
                | CoreError::TangentialRoot { .. }
                | CoreError::Multiplicity { .. }
                | CoreError::SingularBoundary { .. } => exit::NUMERICAL,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
