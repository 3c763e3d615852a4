use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capability error: {0}")]
    Capability(String),
    #[error("transmission system is not solvable at this frequency (condition number {cond:.3e})")]
    Solvability { cond: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("extraction failure: {0}")]
    Extraction(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Domain(_) | Error::Config(_) | Error::Parse(_) | Error::Io(_) => 2,
            Error::Capability(_) | Error::Solvability { .. } | Error::Numerical(_) => 3,
            Error::Extraction(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
