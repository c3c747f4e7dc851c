//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid feasible set: {0}")]
    InvalidFeasibleSet(String),

    #[error("feasible set appears empty or degenerate: {0}")]
    Infeasible(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(
        "volume estimate too inaccurate (relative standard error {rel_se:.3e} > {limit:.1e}); \
         supply a volume override"
    )]
    VolumeAccuracy { rel_se: f64, limit: f64 },

    #[error("rejection sampler acceptance rate {rate:.3e} below {limit:.1e}; body too thin")]
    SamplerTooThin { rate: f64, limit: f64 },

    #[error("solver produced an empty trace")]
    EmptyTrace,

    #[error("oracle cross-check failed: {0}")]
    OracleMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(String),
}

impl Error {
    /// Exit-code category: validation problems map to 1, runtime failures to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidBody(_)
                | Error::InvalidFeasibleSet(_)
                | Error::InvalidProblem(_)
                | Error::InvalidSchedule(_)
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
