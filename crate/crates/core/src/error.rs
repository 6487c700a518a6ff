use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid annotation pair: {0}")]
    InvalidPair(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The field stores the zero vector at the queried pixel.
    #[error("no motion information at pixel ({x}, {y})")]
    NoMotion { x: usize, y: usize },

    #[error("field for frames ({earlier}, {later}) is unavailable")]
    Unavailable { earlier: u32, later: u32 },

    #[error("sequence incomplete: no field for frames ({earlier}, {later})")]
    MissingField { earlier: u32, later: u32 },

    #[error("cannot place cells: {0}")]
    Infeasible(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than the environment
    /// or a bug.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::InvalidPair(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch(_)
                | Error::Infeasible(_)
                | Error::Parse { .. }
                | Error::MissingField { .. }
                | Error::Unavailable { .. }
        )
    }
}
