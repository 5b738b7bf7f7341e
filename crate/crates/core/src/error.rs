use thiserror::Error;

/// Errors raised by the stability engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HuError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid integration bound: {0}")]
    InvalidBound(String),

    #[error("quadrature did not converge (estimated error {estimate:e} after {subdivisions} subdivisions)")]
    NonConvergence { estimate: f64, subdivisions: usize },

    #[error("integrand is not decaying (rate {0}); the improper integral may diverge")]
    NonDecaying(f64),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("no bounded construction exists in this regime: {0}")]
    UnstableRegime(String),

    #[error("trajectories are sampled on different grids")]
    GridMismatch,

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),

    #[error("root finder did not converge (residual {residual:e})")]
    RootFinder { residual: f64 },
}

impl HuError {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            HuError::NonConvergence { .. }
                | HuError::NonDecaying(_)
                | HuError::Divergent(_)
                | HuError::RootFinder { .. }
                | HuError::DerivativeUnavailable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, HuError>;
