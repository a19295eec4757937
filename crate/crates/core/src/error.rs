use thiserror::Error;

/// Errors raised by the library. Each variant maps to a distinct CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate pixel: {0}")]
    DegeneratePixel(String),
    #[error("undefined roughness: T22 + T33 = 0")]
    UndefinedRoughness,
    #[error("undefined SCR: clutter mean is zero")]
    UndefinedScr,
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
