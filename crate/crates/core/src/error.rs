use thiserror::Error;

use crate::config::ValidationErrors;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Config(#[from] ValidationErrors),

    #[error("drift overflow")]
    DriftOverflow,

    #[error("drift is not differentiable at the root: {0}")]
    NonDifferentiable(String),

    #[error("no analytic derivative available for drift `{0}`")]
    NoAnalyticDerivative(String),

    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,

    #[error(
        "matrix is not Hurwitz (max real part {max_real_part:e}): no unique PD solution guaranteed"
    )]
    NotHurwitz { max_real_part: f64 },

    #[error("{0} not positive definite")]
    NotPositiveDefinite(&'static str),

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("chain diverged: non-finite iterate")]
    Diverged,

    #[error("unstable configuration: {diverged} of {chains} chains diverged")]
    Unstable { diverged: usize, chains: usize },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate samples: {0}")]
    Degenerate(&'static str),

    #[error("no power-law scaling on grid")]
    NoScaling,

    #[error("no stationary law: drift vanishes identically")]
    NoStationaryLaw,

    #[error("operation requires {0}")]
    Unsupported(&'static str),
}

impl Error {
    /// Errors caused by the user's input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::Config(_))
    }
}
