use alloc::string::String;

/// Errors produced by the walk, entropy and enumeration engines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coin is not unitary: |e|^2 + |f|^2 = {norm}")]
    NonUnitaryCoin { norm: f64 },
    #[error("coin is not mixing: both e and f must be nonzero")]
    NonMixingCoin,
    #[error("coin state is not normalized: |l|^2 + |r|^2 = {norm}")]
    UnnormalizedState { norm: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("walk support reached the boundary of a line of radius {radius}")]
    BoundaryOverflow { radius: usize },
    #[error("state has vanishing total probability {total}")]
    DegenerateState { total: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("coin transition system exceeded the cap of {cap} nodes")]
    StateExplosion { cap: usize },
    #[error("stationary distribution did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("truncated systems need extremal entropy bounds")]
    MissingExtremalBounds,
    #[error("truncation requires reduced mode")]
    TruncatedFullMode,
    #[error("outcome tree would have {attempted} leaves, above the cap of {cap}")]
    CapExceeded { attempted: u128, cap: u128 },
    #[error("x = {x} is outside the open support (-{half_width}, {half_width})")]
    OutsideSupport { x: f64, half_width: f64 },
    #[error("quadrature did not converge (residual {residual:e})")]
    QuadratureNonConvergence { residual: f64 },
}

impl Error {
    /// Short machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonUnitaryCoin { .. } => "non-unitary-coin",
            Error::NonMixingCoin => "non-mixing-coin",
            Error::UnnormalizedState { .. } => "unnormalized-state",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::BoundaryOverflow { .. } => "boundary-overflow",
            Error::DegenerateState { .. } => "degenerate-state",
            Error::InvalidDistribution(_) => "invalid-distribution",
            Error::StateExplosion { .. } => "state-explosion",
            Error::NonConvergence { .. } => "non-convergence",
            Error::MissingExtremalBounds => "missing-extremal-bounds",
            Error::TruncatedFullMode => "truncated-full-mode",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::OutsideSupport { .. } => "outside-support",
            Error::QuadratureNonConvergence { .. } => "quadrature-non-convergence",
        }
    }

    pub(crate) fn invalid(msg: &str) -> Self {
        Error::InvalidArgument(String::from(msg))
    }
}

pub type Result<T> = core::result::Result<T, Error>;
