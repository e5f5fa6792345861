use alloc::string::String;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The estimate exists but cannot be turned into the requested quantity,
    /// e.g. a non-positive denominator when inverting to the extremal index.
    #[error("degenerate estimate ({what}): value {value}")]
    Degenerate { what: &'static str, value: f64 },

    #[error("unsupported model: {0}")]
    UnsupportedModel(&'static str),

    #[error("quadrature did not converge for {what}: refinement delta {delta:e} exceeds tolerance {tolerance:e}")]
    NumericFailure {
        what: &'static str,
        delta: f64,
        tolerance: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
