use thiserror::Error;

/// Failures reported by the library. Mathematical precondition violations are
/// kept apart from input/format problems so the CLI can map them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid scalar product: {0}")]
    InvalidSpace(String),

    #[error("precondition violated ({hypothesis}): {detail}")]
    Precondition { hypothesis: &'static str, detail: String },

    #[error("singular or ill-conditioned {what} (condition estimate {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("eigen decomposition failed: {0}")]
    Eigen(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn precondition(hypothesis: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition { hypothesis, detail: detail.into() }
    }

    /// True for violations of a mathematical hypothesis, as opposed to I/O or
    /// malformed input.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::Dimension(_)
                | Error::InvalidSpace(_)
                | Error::Precondition { .. }
                | Error::Singular { .. }
                | Error::Eigen(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
