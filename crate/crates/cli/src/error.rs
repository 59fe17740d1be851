use std::path::Path;

use gbayes_core::Error as CoreError;

/// Exit status for a run whose checks did not all pass.
pub const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for bad flags, input or configuration.
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Verification ran to completion and some check failed.
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Precondition and input failures are usage errors; numerical failures
    /// during a computation are not.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Core(e) => match e {
                CoreError::Domain { .. } | CoreError::InvalidSpec(_) | CoreError::DimensionMismatch { .. } => {
                    EXIT_USAGE
                }
                CoreError::Divergence { .. } | CoreError::Quadrature { .. } | CoreError::Truncation { .. } => {
                    EXIT_CHECK_FAILED
                }
            },
            CliError::ChecksFailed(_) => EXIT_CHECK_FAILED,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::usage("x").exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::DimensionMismatch { expected: 3, got: 2 }).exit_code(), 2);
        assert_eq!(CliError::Core(CoreError::InvalidSpec("b".into())).exit_code(), 2);
        let quad = CoreError::Quadrature {
            function: "f",
            value: 0.0,
            error_estimate: 1.0,
        };
        assert_eq!(CliError::Core(quad).exit_code(), 1);
        assert_eq!(CliError::ChecksFailed("n".into()).exit_code(), 1);
    }
}
