use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid interval exchange: {0}")]
    Construction(String),

    /// An orbit or index was requested past the range where a rational
    /// stand-in behaves like the irrational it approximates.
    #[error("horizon exceeded: requested {requested}, horizon is {horizon}")]
    Horizon { requested: u64, horizon: u64 },

    #[error("degenerate map: {0}")]
    Degenerate(String),

    #[error("boundary-degenerate atom at j = {0}")]
    BoundaryDegenerate(u64),

    #[error("work budget exceeded: {0}")]
    Budget(String),

    #[error("insufficient scales: need {needed}, have {available}")]
    InsufficientScales { needed: usize, available: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
