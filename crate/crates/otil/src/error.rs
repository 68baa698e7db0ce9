//! Crate-wide error type and result alias.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data (config file, demo file, CSV) is structurally valid but
    /// semantically unacceptable.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Expert training did not meet the quality bar within the retry budget.
    #[error("expert generation failed: {0}")]
    GenerationFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// An internal contract was violated; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for the CLI: user-correctable failures exit 1,
    /// internal invariant violations exit 2.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_split_user_errors_from_internal_bugs() {
        assert_eq!(Error::InvalidArgument("x".into()).exit_code(), 1);
        assert_eq!(Error::Validation("x".into()).exit_code(), 1);
        assert_eq!(
            Error::Parse {
                line: 3,
                message: "x".into()
            }
            .exit_code(),
            1
        );
        assert_eq!(Error::GenerationFailure("x".into()).exit_code(), 1);
        assert_eq!(Error::Internal("x".into()).exit_code(), 2);
    }

    #[test]
    fn parse_error_message_carries_line_number() {
        let e = Error::Parse {
            line: 42,
            message: "bad float".into(),
        };
        assert!(e.to_string().contains("line 42"));
    }
}
