use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("degenerate channel: smallest/largest singular value ratio {ratio:e} below threshold")]
    DegenerateChannel { ratio: f64 },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unbounded moment: {0}")]
    UnboundedMoment(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    /// Short machine-friendly tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::DegenerateChannel { .. } => "degenerate-channel",
            Error::Index(_) => "index",
            Error::Validation(_) => "validation",
            Error::UnboundedMoment(_) => "unbounded-moment",
            Error::Parse { .. } => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
