//! Oscillating delayed feedback control (ODFC) for scalar ODEs.
//!
//! Two switched controllers stabilize an unstable equilibrium `x*` of
//! `x' = f(x)`, where `f'(x*) = λ > 0`:
//!
//! * [`MethodKind::Velocity`]: `x' = f(x) + ε(t) x'(t - τ)`, gain on during the
//!   second of every two τ-subintervals.
//! * [`MethodKind::States`]: `x' = f(x) + ε(t) (x(t - 2τ) - x(t - τ))`, gain on
//!   during the third of every three τ-subintervals.
//!
//! Because the gain is switched off whenever the delayed terms are sampled,
//! each schedule period reduces to a one-dimensional return map `P` whose
//! slope at the equilibrium, `α = P'(x*)`, has a closed form. The crate
//! provides the closed-form design ([`design`]), a boundary-aligned
//! fixed-step integrator ([`integrator`]), numerical return maps used to
//! cross-check the formulas ([`poincare`]) and parameter-plane studies
//! ([`analysis`]).

// `!(x > 0.0)` guards are written that way so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod design;
mod error;
pub mod integrator;
pub mod poincare;
pub mod schedule;
pub mod system;

pub use analysis::{
    check_envelope, classify_cell, counterexample_cell, estimate_rate, single_delay_counterexample,
    stability_raster, EnvelopeFit, Raster, RasterAxes, RasterCell, RasterMode, RateFit,
    EMPIRICAL_PERIODS, EMPIRICAL_STEPS_PER_TAU, EMPIRICAL_X0,
};
pub use design::{
    alpha_from_eps, convergence_rate, eps_from_alpha, stability_interval, tau_star,
    tau_star_objective, tau_star_residual, ControlParams, DesignReport, StabilityInterval, TauStar,
};
pub use error::{Error, Result};
pub use integrator::{
    control_signal, simulate, simulate_law, state_at, FeedbackLaw, SimConfig, Trajectory,
    VelocitySource, DEFAULT_STEPS_PER_TAU, DIVERGENCE_BOUND,
};
pub use poincare::{
    contraction_run, period_map, period_map_derivative, ContractionRun, PeriodMapProbe,
    DEFAULT_PROBE_STEP,
};
pub use schedule::{gain_at, MethodKind};
pub use system::{eval_f, make_system, Plant, SystemSpec};
