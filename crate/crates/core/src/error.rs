use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SgmError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("order {ell} outside the working range (max {max})")]
    Range { ell: u32, max: u32 },
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("near-zero denominator: continued fraction for order {ell} did not converge after {iterations} iterations")]
    NearZeroDenominator { ell: u32, iterations: usize },
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("computed kappa is non-negative ({0}); not a gain-mode singularity")]
    NonGainKappa(f64),
    #[error("bracket sanity check failed: {0}")]
    Bracket(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, SgmError>;
