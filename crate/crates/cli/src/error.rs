use std::path::PathBuf;

use bwave_core::WaveError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Wave(#[from] WaveError),
    #[error("{0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "validation",
            2 => "solver",
            _ => "verification",
        }
    }

    /// 1 for bad input, 2 for solver failures, 3 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) | Self::Io { .. } => 1,
            Self::Wave(e) => match e {
                WaveError::ShapeMismatch(_)
                | WaveError::InvalidGrid(_)
                | WaveError::InvalidProblem(_)
                | WaveError::BoundsInverted { .. }
                | WaveError::InvalidConfig(_) => 1,
                _ => 2,
            },
            Self::Verification(_) => 3,
        }
    }

    /// Single-line form for standard error.
    pub fn machine_line(&self) -> String {
        format!(
            "error kind={} exit={} message={:?}",
            self.kind(),
            self.exit_code(),
            self.to_string()
        )
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
