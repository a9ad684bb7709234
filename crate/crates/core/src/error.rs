use thiserror::Error;

/// Errors raised by the co-simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value is out of its domain (negative speed, NaN, zero window...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A counting invariant was broken by the caller (e.g. delivered > published).
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Scenario, fabric or profile configuration is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A route could not be built from the current world snapshot.
    #[error("routing error: {0}")]
    Routing(String),

    /// The two simulators drifted apart or an internal invariant broke mid-run.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Parse failure with the offending line (1-based) and field.
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse {
        path: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for errors that stem from bad user configuration rather than a
    /// broken run. The CLI maps these to exit code 1.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parse { .. } | Error::Io { .. } | Error::InvalidInput(_) | Error::Routing(_)
        )
    }
}
