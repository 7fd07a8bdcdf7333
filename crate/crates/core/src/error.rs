use thiserror::Error;

pub type Result<T> = std::result::Result<T, QkdError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QkdError {
    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid dimension {0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("{what} = {value} outside valid range [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("conditioning on outcome {outcome} with zero probability")]
    UndefinedConditional { outcome: usize },
}

impl QkdError {
    pub(crate) fn domain(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        QkdError::Domain { what, value, lo, hi }
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(QkdError::InvalidDimension(d))
    } else {
        Ok(())
    }
}

pub(crate) fn check_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    // Tiny slack absorbs rounding in boundary values such as 1/d computed elsewhere.
    let slack = 1e-14;
    if value.is_nan() || value < lo - slack || value > hi + slack {
        Err(QkdError::domain(what, value, lo, hi))
    } else {
        Ok(())
    }
}
