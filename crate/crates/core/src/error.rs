use thiserror::Error;

/// Errors raised by the forecasting library.
///
/// `Domain` covers precondition violations (bad ranges, too little history,
/// parameters out of range). `Numeric` covers failures of the linear algebra
/// (factorisations that do not converge, degenerate covariance).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FtsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("segment length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("not enough curves: need at least {needed}, got {got}")]
    TooFewCurves { needed: usize, got: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("zero-variance data")]
    ZeroVariance,
}

impl FtsError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        FtsError::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        FtsError::Numeric(msg.into())
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, FtsError::Numeric(_) | FtsError::ZeroVariance)
    }
}

pub type Result<T> = std::result::Result<T, FtsError>;
