use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix does not have determinant 1")]
    NotUnimodular,
    #[error("bit budget exceeded: {needed} bits needed, budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precision target not reached after {0} bits")]
    PrecisionUnreachable(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("rejection sampler gave up after {0} proposals")]
    RejectionCap(u64),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
