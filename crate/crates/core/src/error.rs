use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("line search stalled after {halvings} backtracking steps")]
    StalledLineSearch { halvings: u32 },
    #[error("signal estimate is zero; normalization is undefined")]
    ZeroSignal,
    #[error("size {size} exceeds the supported cap {cap}")]
    UnsupportedSize { size: usize, cap: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what, expected, found })
        }
    }
}
