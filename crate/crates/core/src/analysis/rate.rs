use serde::{Deserialize, Serialize};

use crate::design::convergence_rate;
use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Period samples at or below this magnitude are rounding noise.
pub const SAMPLE_FLOOR: f64 = 1e-12;
pub const MIN_RATE_SAMPLES: usize = 4;

/// Least-squares exponential rate of the period samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Fitted slope of `ln|x(k·mτ) - x*|` against `t`.
    pub beta_hat: f64,
    /// `ln|α|/(mτ)` when the trajectory carries a stabilizing multiplier.
    pub beta_analytic: Option<f64>,
    pub samples_used: usize,
    /// Largest absolute log-space residual of the fit.
    pub residual: f64,
}

impl RateFit {
    pub fn relative_error(&self) -> Option<f64> {
        self.beta_analytic.map(|b| ((self.beta_hat - b) / b).abs())
    }
}

/// Fits `ln|x(k·mτ) - x*| ≈ a + β̂ t` over the leading samples above
/// [`SAMPLE_FLOOR`].
pub fn estimate_rate(traj: &Trajectory) -> Result<RateFit> {
    let period = traj.method().period_multiplier() as f64 * traj.tau();
    let samples = traj.period_samples();
    let usable: Vec<(f64, f64)> = samples
        .iter()
        .enumerate()
        .take_while(|(_, d)| d.abs() > SAMPLE_FLOOR)
        .map(|(k, d)| (k as f64 * period, d.abs().ln()))
        .collect();
    if usable.len() < MIN_RATE_SAMPLES {
        // started off the floor, then collapsed within a few periods
        if !usable.is_empty() && usable.len() < samples.len() {
            return Err(Error::DeadbeatDetected);
        }
        return Err(Error::InsufficientSamples {
            usable: usable.len(),
            needed: MIN_RATE_SAMPLES,
        });
    }

    let n = usable.len() as f64;
    let t_mean = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxy, sxx) = usable.iter().fold((0.0, 0.0), |(sxy, sxx), &(t, y)| {
        let dt = t - t_mean;
        (sxy + dt * (y - y_mean), sxx + dt * dt)
    });
    let slope = sxy / sxx;
    let intercept = y_mean - slope * t_mean;
    let residual = usable
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).abs())
        .fold(0.0, f64::max);

    let beta_analytic = traj
        .alpha()
        .and_then(|a| convergence_rate(traj.method(), a, traj.tau()).ok());
    Ok(RateFit {
        beta_hat: slope,
        beta_analytic,
        samples_used: usable.len(),
        residual,
    })
}
