use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("f(x*) = {residual:e} at x* = {x_star}: not an equilibrium")]
    NotAnEquilibrium { x_star: f64, residual: f64 },

    #[error(
        "linearization slope {lambda} at x* is not positive; only unstable equilibria are handled"
    )]
    NotUnstable { lambda: f64 },

    #[error("time {0} is outside the valid range")]
    TimeOutOfRange(f64),

    #[error("trajectory diverged at t = {t}: |x - x*| = {deviation:e}")]
    Diverged { t: f64, deviation: f64 },

    #[error("no sign change of the optimal-delay residual in ({lo}, {hi})")]
    NoBracket { lo: f64, hi: f64 },

    #[error("optimal-delay residual changes sign {} times: {roots:?}", roots.len())]
    MultipleRoots { roots: Vec<f64> },

    #[error("deadbeat detected: period samples collapse below the noise floor")]
    DeadbeatDetected,

    #[error("insufficient samples for a rate fit: {usable} usable, need {needed}")]
    InsufficientSamples { usable: usize, needed: usize },
}
