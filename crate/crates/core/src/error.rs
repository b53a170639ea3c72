use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs outside the admissible set (coincident points, r <= 0, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed configuration or table file.
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical step failed in a way that indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
