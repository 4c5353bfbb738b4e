use std::path::PathBuf;

use thiserror::Error;

/// Process exit statuses. Usage errors reported by the argument parser
/// also exit with [`ExitCode::Config`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Io = 3,
    Numerical = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Library(#[from] nnta::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        use nnta::Error as E;
        match self {
            Self::Config(_) => ExitCode::Config,
            Self::Io { .. } | Self::Parse { .. } => ExitCode::Io,
            Self::Library(e) => match e {
                E::Io { .. } | E::Format(_) => ExitCode::Io,
                E::NonFinite
                | E::IllConditionedSketch { .. }
                | E::SvdNotConverged
                | E::ZeroNorm(_)
                | E::ConstantReference => ExitCode::Numerical,
                _ => ExitCode::Config,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
