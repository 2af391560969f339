use thiserror::Error;

/// Errors raised by the timing, subjective and criteria operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),

    /// Output PTS rounding produced two equal timestamps.
    #[error("synthesis degenerate: output pts collapse at frame {frame}")]
    SynthesisDegenerate { frame: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("undefined auc for task {task}: {reason}")]
    UndefinedAuc { task: &'static str, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for failures caused by the numbers themselves rather than by
    /// malformed input.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::SynthesisDegenerate { .. }
                | Error::DegenerateFit(_)
                | Error::UndefinedAuc { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
