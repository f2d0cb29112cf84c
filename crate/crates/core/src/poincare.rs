//! Numerical return maps over one schedule period.
//!
//! `P` sends the state at the start of a period to the state one period
//! later. It is obtained by integrating exactly one period, and its slope at
//! the equilibrium is compared with the closed-form multiplier.

use serde::{Deserialize, Serialize};

use crate::design::{alpha_from_eps, ControlParams};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SimConfig, DEFAULT_STEPS_PER_TAU};
use crate::schedule::MethodKind;
use crate::system::SystemSpec;

pub const DEFAULT_PROBE_STEP: f64 = 1e-5;

/// Return map `P(x_in)`, in the user frame.
pub fn period_map(
    spec: &SystemSpec,
    params: &ControlParams,
    x_in: f64,
    steps_per_tau: usize,
) -> Result<f64> {
    let cfg = SimConfig::new(x_in, 1).with_steps_per_tau(steps_per_tau);
    let traj = simulate(spec, params, &cfg)?;
    Ok(*traj
        .states()
        .last()
        .expect("trajectory has at least one node"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodMapProbe {
    pub method: MethodKind,
    pub x_in: f64,
    pub x_out: f64,
    /// `(P(x* + h) - P(x* - h)) / 2h`
    pub numeric_dp: f64,
    pub analytic_alpha: f64,
    pub discrepancy: f64,
}

/// Central-difference slope of `P` at the equilibrium against the closed form.
pub fn period_map_derivative(
    spec: &SystemSpec,
    params: &ControlParams,
    h: f64,
    steps_per_tau: usize,
) -> Result<PeriodMapProbe> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "probe step must be positive, got {h}"
        )));
    }
    let x_star = spec.x_star();
    let x_in = x_star + h;
    let x_out = period_map(spec, params, x_in, steps_per_tau)?;
    let below = period_map(spec, params, x_star - h, steps_per_tau)?;
    let numeric_dp = ((x_out - x_star) - (below - x_star)) / (2.0 * h);
    let analytic_alpha = alpha_from_eps(params.method, spec.lambda(), params.eps, params.tau)?;
    Ok(PeriodMapProbe {
        method: params.method,
        x_in,
        x_out,
        numeric_dp,
        analytic_alpha,
        discrepancy: (numeric_dp - analytic_alpha).abs(),
    })
}

/// Outcome of checking `|x_{k+1}| < |x_k|` on period samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionRun {
    /// Entry `k` compares period samples `k + 1` and `k`.
    pub decreasing: Vec<bool>,
    /// Period samples `x(k·mτ) - x*`, `k = 0..=K`.
    pub samples: Vec<f64>,
    /// Some comparison involved two exact zeros (start at the equilibrium).
    pub degenerate: bool,
}

impl ContractionRun {
    pub fn all_decreasing(&self) -> bool {
        self.decreasing.iter().all(|&d| d)
    }
}

/// Period-sample contraction test from `x0` over `periods` periods.
pub fn contraction_run(
    spec: &SystemSpec,
    params: &ControlParams,
    x0: f64,
    periods: usize,
) -> Result<ContractionRun> {
    let traj = simulate(
        spec,
        params,
        &SimConfig::new(x0, periods).with_steps_per_tau(DEFAULT_STEPS_PER_TAU),
    )?;
    let samples = traj.period_samples();
    let decreasing = samples
        .windows(2)
        .map(|w| w[1].abs() < w[0].abs())
        .collect();
    let degenerate = samples.windows(2).any(|w| w[0] == 0.0 && w[1] == 0.0);
    Ok(ContractionRun {
        decreasing,
        samples,
        degenerate,
    })
}
