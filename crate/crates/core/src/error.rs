use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric ({context}): max asymmetry {asymmetry:e}")]
    NotSymmetric {
        context: &'static str,
        asymmetry: f64,
    },

    #[error("factorization failed: {0}")]
    Factorization(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(&'static str),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("item ids do not match: {0}")]
    IdMismatch(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for errors caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Factorization(_) | Error::Numerical(_) | Error::NonFinite(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
