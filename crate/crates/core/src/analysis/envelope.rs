use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Tightest constants for the two-sided exponential envelope
/// `c_m e^{a_lo t}|x0| <= |x(t)| <= c_M e^{a_up t}|x0|` with
/// `a_lo = ln(|α| - μ)/(mτ)` and `a_up = ln(|α| + μ)/(mτ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub mu: f64,
    /// Largest lower constant; `None` when the lower bound is not checked
    /// (`α = 0` or `|α| <= μ`).
    pub c_m: Option<f64>,
    /// Smallest upper constant.
    #[serde(rename = "c_M")]
    pub c_big_m: f64,
    pub rate_lower: Option<f64>,
    pub rate_upper: f64,
    pub holds: bool,
}

impl EnvelopeFit {
    pub fn lower(&self, x0: f64, t: f64) -> Option<f64> {
        Some(self.c_m? * scaled_exp(self.rate_lower?, t) * x0.abs())
    }

    pub fn upper(&self, x0: f64, t: f64) -> f64 {
        self.c_big_m * scaled_exp(self.rate_upper, t) * x0.abs()
    }
}

/// `e^{rate·t}`, with `t = 0` mapped to 1 even for an infinite rate.
fn scaled_exp(rate: f64, t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        (rate * t).exp()
    }
}

/// Fits the envelope constants at every grid node of `traj`.
pub fn check_envelope(traj: &Trajectory, alpha: f64, mu: f64) -> Result<EnvelopeFit> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::InvalidParameter(format!(
            "mu must lie in [0, 1), got {mu}"
        )));
    }
    if !(alpha.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "envelope needs |alpha| < 1, got {alpha}"
        )));
    }
    let period = traj.method().period_multiplier() as f64 * traj.tau();
    let a = alpha.abs();
    let rate_upper = if alpha == 0.0 {
        mu.ln() / period
    } else {
        (a + mu).ln() / period
    };
    let rate_lower = (alpha != 0.0 && a > mu).then(|| (a - mu).ln() / period);

    let dev = traj.deviations();
    let d0 = dev[0].abs();
    if d0 == 0.0 {
        // at rest: every positive constant works
        return Ok(EnvelopeFit {
            mu,
            c_m: rate_lower.map(|_| 1.0),
            c_big_m: 1.0,
            rate_lower,
            rate_upper,
            holds: dev.iter().all(|&d| d == 0.0),
        });
    }

    // log-space ratios |x(t)| / (e^{rate t} |x0|)
    let log_ratio = |d: f64, rate: f64, t: f64| {
        let growth = if t == 0.0 { 0.0 } else { rate * t };
        (d.abs().ln() - growth - d0.ln()).exp()
    };
    let times = traj.times();
    let c_big_m = dev
        .iter()
        .zip(times)
        .map(|(&d, &t)| {
            if d == 0.0 {
                0.0
            } else {
                log_ratio(d, rate_upper, t)
            }
        })
        .fold(0.0, f64::max);
    let c_m = rate_lower.map(|rate| {
        dev.iter()
            .zip(times)
            .map(|(&d, &t)| log_ratio(d, rate, t))
            .fold(f64::INFINITY, f64::min)
    });
    let positive_finite = |c: f64| c.is_finite() && c > 0.0;
    let holds = positive_finite(c_big_m) && c_m.is_none_or(positive_finite);
    Ok(EnvelopeFit {
        mu,
        c_m,
        c_big_m,
        rate_lower,
        rate_upper,
        holds,
    })
}
