//! Stability charts over the `(λτ, gain)` plane.
//!
//! Axes follow the usual normalizations: `(λτ, ε)` for the velocity method
//! and `(λτ, ε/λ)` for the states method. Cells are classified analytically
//! by `|α| < 1` and empirically by simulating the linear plant `λx`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::alpha_from_eps;
use crate::error::{Error, Result};
use crate::integrator::{simulate_law, FeedbackLaw, SimConfig, VelocitySource};
use crate::schedule::MethodKind;
use crate::system::{make_system, Plant};

pub const EMPIRICAL_STEPS_PER_TAU: usize = 64;
pub const EMPIRICAL_X0: f64 = 0.01;
/// Consecutive period samples that must contract.
pub const EMPIRICAL_PERIODS: usize = 8;
/// Cells with analytic `|α|` strictly inside this band are boundary-adjacent.
pub const BOUNDARY_BAND: (f64, f64) = (0.9, 1.1);
const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterMode {
    Analytic,
    Empirical,
    Both,
}

impl RasterMode {
    fn analytic(self) -> bool {
        matches!(self, RasterMode::Analytic | RasterMode::Both)
    }

    fn empirical(self) -> bool {
        matches!(self, RasterMode::Empirical | RasterMode::Both)
    }
}

impl std::str::FromStr for RasterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(RasterMode::Analytic),
            "empirical" => Ok(RasterMode::Empirical),
            "both" => Ok(RasterMode::Both),
            other => Err(Error::InvalidParameter(format!(
                "unknown raster mode `{other}` (expected analytic, empirical or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Stable,
    Unstable,
    BoundaryAdjacent,
}

/// Grid axes. `lambda_tau` is right-closed over its range, `eps_norm`
/// includes both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterAxes {
    pub lambda_tau: Vec<f64>,
    pub eps_norm: Vec<f64>,
}

impl RasterAxes {
    pub fn new(
        lambda_tau_range: (f64, f64),
        eps_range: (f64, f64),
        grid: (usize, usize),
    ) -> Result<Self> {
        let (nx, ny) = grid;
        if nx < MIN_GRID || ny < MIN_GRID {
            return Err(Error::InvalidParameter(format!(
                "raster grid must be at least {MIN_GRID}x{MIN_GRID}, got {nx}x{ny}"
            )));
        }
        let (x_lo, x_hi) = lambda_tau_range;
        if !(x_lo >= 0.0 && x_hi > x_lo && x_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda*tau range must satisfy 0 <= lo < hi, got ({x_lo}, {x_hi})"
            )));
        }
        let (y_lo, y_hi) = eps_range;
        if !(y_hi > y_lo && y_lo.is_finite() && y_hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "empty gain range ({y_lo}, {y_hi})"
            )));
        }
        let lambda_tau = (0..nx)
            .map(|j| x_lo + (j + 1) as f64 * (x_hi - x_lo) / nx as f64)
            .collect();
        let eps_norm = (0..ny)
            .map(|i| y_lo + i as f64 * (y_hi - y_lo) / (ny - 1) as f64)
            .collect();
        Ok(RasterAxes {
            lambda_tau,
            eps_norm,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterCell {
    pub lambda_tau: f64,
    /// Gain on the raster axis: `ε` (velocity) or `ε/λ` (states).
    pub eps_norm: f64,
    pub eps: f64,
    pub analytic_alpha: Option<f64>,
    pub analytic_stable: Option<bool>,
    pub empirical_stable: Option<bool>,
}

impl RasterCell {
    pub fn in_boundary_band(&self) -> bool {
        self.analytic_alpha
            .is_some_and(|a| a.abs() > BOUNDARY_BAND.0 && a.abs() < BOUNDARY_BAND.1)
    }

    /// Three-way class; the empirical verdict is used when no analytic one exists.
    pub fn class(&self) -> CellClass {
        if self.in_boundary_band() {
            return CellClass::BoundaryAdjacent;
        }
        match self.analytic_stable.or(self.empirical_stable) {
            Some(true) => CellClass::Stable,
            _ => CellClass::Unstable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub method: MethodKind,
    #[serde(skip)]
    pub law: Option<FeedbackLaw>,
    pub lambda: f64,
    pub mode: RasterMode,
    pub axes: RasterAxes,
    /// Cells with `lambda_tau` varying slowest: `cells[ix * ny + iy]`.
    pub cells: Vec<RasterCell>,
}

impl Raster {
    pub fn cell(&self, ix: usize, iy: usize) -> &RasterCell {
        &self.cells[ix * self.axes.eps_norm.len() + iy]
    }

    /// `(agreeing, compared)` over cells outside the boundary band that carry
    /// both verdicts.
    pub fn agreement(&self) -> (usize, usize) {
        self.cells
            .iter()
            .filter(|c| !c.in_boundary_band())
            .filter_map(|c| Some((c.analytic_stable?, c.empirical_stable?)))
            .fold((0, 0), |(agree, total), (a, e)| {
                (agree + usize::from(a == e), total + 1)
            })
    }

    pub fn agreement_fraction(&self) -> Option<f64> {
        let (agree, total) = self.agreement();
        (total > 0).then(|| agree as f64 / total as f64)
    }

    pub fn empirical_stable_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.empirical_stable == Some(true))
            .count()
    }

    pub fn analytic_stable_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| c.analytic_stable == Some(true))
            .count()
    }
}

fn gain_from_axis(method: MethodKind, lambda: f64, eps_norm: f64) -> f64 {
    match method {
        MethodKind::Velocity => eps_norm,
        MethodKind::States => eps_norm * lambda,
    }
}

/// Simulates the linear plant and checks strict contraction of
/// [`EMPIRICAL_PERIODS`] consecutive period samples. Divergence counts as
/// unstable; a sample that has collapsed to exactly zero stays converged.
fn empirical_stable(law: FeedbackLaw, lambda: f64, eps: f64, tau: f64) -> bool {
    let spec = make_system(Plant::Linear { slope: lambda }, 0.0).expect("lambda checked positive");
    let cfg =
        SimConfig::new(EMPIRICAL_X0, EMPIRICAL_PERIODS).with_steps_per_tau(EMPIRICAL_STEPS_PER_TAU);
    match simulate_law(&spec, law, eps, tau, &cfg, VelocitySource::Field) {
        Ok(traj) => traj
            .period_samples()
            .windows(2)
            .all(|w| w[1].abs() < w[0].abs() || (w[0] == 0.0 && w[1] == 0.0)),
        Err(_) => false,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )))
    }
}

fn evaluate(
    law: FeedbackLaw,
    lambda: f64,
    lambda_tau: f64,
    eps_norm: f64,
    mode: RasterMode,
) -> Result<RasterCell> {
    let method = law.schedule();
    let tau = lambda_tau / lambda;
    let eps = gain_from_axis(method, lambda, eps_norm);
    let analytic_alpha = match law {
        FeedbackLaw::CurrentMinusDelayed => None,
        _ => Some(alpha_from_eps(method, lambda, eps, tau)?),
    };
    let analytic_stable = if mode.analytic() {
        analytic_alpha.map(|a| a.abs() < 1.0)
    } else {
        None
    };
    let empirical_stable = mode
        .empirical()
        .then(|| empirical_stable(law, lambda, eps, tau));
    Ok(RasterCell {
        lambda_tau,
        eps_norm,
        eps,
        analytic_alpha,
        analytic_stable,
        empirical_stable,
    })
}

/// Classifies a single parameter point.
pub fn classify_cell(
    method: MethodKind,
    lambda: f64,
    lambda_tau: f64,
    eps_norm: f64,
    mode: RasterMode,
) -> Result<RasterCell> {
    check_lambda(lambda)?;
    evaluate(
        FeedbackLaw::for_method(method),
        lambda,
        lambda_tau,
        eps_norm,
        mode,
    )
}

fn sweep(law: FeedbackLaw, lambda: f64, axes: RasterAxes, mode: RasterMode) -> Result<Raster> {
    let ny = axes.eps_norm.len();
    let cells = (0..axes.lambda_tau.len() * ny)
        .into_par_iter()
        .map(|k| {
            evaluate(
                law,
                lambda,
                axes.lambda_tau[k / ny],
                axes.eps_norm[k % ny],
                mode,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Raster {
        method: law.schedule(),
        law: Some(law),
        lambda,
        mode,
        axes,
        cells,
    })
}

/// Stability chart for one method. `eps_range` is in axis units (`ε` or
/// `ε/λ`); `lambda_tau_range` is the range of the product λτ.
pub fn stability_raster(
    method: MethodKind,
    lambda: f64,
    eps_range: (f64, f64),
    lambda_tau_range: (f64, f64),
    grid: (usize, usize),
    mode: RasterMode,
) -> Result<Raster> {
    check_lambda(lambda)?;
    let axes = RasterAxes::new(lambda_tau_range, eps_range, grid)?;
    sweep(FeedbackLaw::for_method(method), lambda, axes, mode)
}

/// Empirical chart of `x' = f(x) + ε(t)(x(t - τ) - x(t))` on the
/// two-subinterval schedule. `eps_range` is in raw `ε`.
pub fn single_delay_counterexample(
    lambda: f64,
    eps_range: (f64, f64),
    lambda_tau_range: (f64, f64),
    grid: (usize, usize),
) -> Result<Raster> {
    check_lambda(lambda)?;
    let axes = RasterAxes::new(lambda_tau_range, eps_range, grid)?;
    sweep(
        FeedbackLaw::CurrentMinusDelayed,
        lambda,
        axes,
        RasterMode::Empirical,
    )
}

/// Classifies one point of the counterexample scheme.
pub fn counterexample_cell(lambda: f64, lambda_tau: f64, eps: f64) -> Result<RasterCell> {
    check_lambda(lambda)?;
    evaluate(
        FeedbackLaw::CurrentMinusDelayed,
        lambda,
        lambda_tau,
        eps,
        RasterMode::Empirical,
    )
}
