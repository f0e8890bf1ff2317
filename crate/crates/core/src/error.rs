use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value:e} overflows format {format}")]
    Overflow { value: f64, format: &'static str },
    #[error("value {value:e} is below the normal range of format {format}")]
    Underflow { value: f64, format: &'static str },
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid format: {0}")]
    InvalidFormat(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("integer overflow: {0}")]
    IntegerOverflow(String),
    #[error("no crossover found below n = {n_max}")]
    NotFound { n_max: u64 },
    #[error("path enumeration exceeds {limit} inexact branchings ({paths} live paths)")]
    Explosion { paths: usize, limit: u32 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for overflow/underflow against a target format.
    pub fn is_range(&self) -> bool {
        matches!(self, Error::Overflow { .. } | Error::Underflow { .. })
    }
}
