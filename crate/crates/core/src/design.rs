//! Closed-form controller design.
//!
//! With `s = λτ`, the return-map slope at the equilibrium is
//!
//! * velocity: `α = e^s (e^s + ε s)`
//! * states:   `α = e^{3s} (1 + ε τ (1 - e^s) e^{-2s})`
//!
//! Both are affine in ε, so the gain that realizes a target multiplier is
//! explicit, and `|α| < 1` maps to an open ε-interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::MethodKind;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

/// Return-map multiplier `P'(x*)` induced by gain `eps`.
pub fn alpha_from_eps(method: MethodKind, lambda: f64, eps: f64, tau: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("tau", tau)?;
    check_finite("eps", eps)?;
    let s = lambda * tau;
    let es = s.exp();
    Ok(match method {
        MethodKind::Velocity => es * (es + eps * s),
        // e^{3s} + ετ(1 - e^s)e^s
        MethodKind::States => es * es * es - eps * tau * es * s.exp_m1(),
    })
}

/// Gain realizing the multiplier `alpha`; inverse of [`alpha_from_eps`].
pub fn eps_from_alpha(method: MethodKind, lambda: f64, alpha: f64, tau: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("tau", tau)?;
    check_finite("alpha", alpha)?;
    let s = lambda * tau;
    Ok(match method {
        MethodKind::Velocity => (-s).exp() * (alpha - (2.0 * s).exp()) / s,
        MethodKind::States => (-s).exp() * ((3.0 * s).exp() - alpha) / (tau * s.exp_m1()),
    })
}

/// Open gain interval `(eps_lo, eps_hi)` on which `|α| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityInterval {
    pub method: MethodKind,
    pub lambda_tau: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
}

impl StabilityInterval {
    pub fn contains(&self, eps: f64) -> bool {
        self.eps_lo < eps && eps < self.eps_hi
    }

    pub fn width(&self) -> f64 {
        self.eps_hi - self.eps_lo
    }
}

/// Stability interval from the hyperbolic (velocity) and exponential (states)
/// closed forms. The velocity bounds are `-2cosh(s)/s < ε < -2sinh(s)/s`.
pub fn stability_interval(method: MethodKind, lambda: f64, tau: f64) -> Result<StabilityInterval> {
    check_positive("lambda", lambda)?;
    check_positive("tau", tau)?;
    let s = lambda * tau;
    let (eps_lo, eps_hi) = match method {
        MethodKind::Velocity => (-2.0 * s.cosh() / s, -2.0 * s.sinh() / s),
        MethodKind::States => {
            let denom = tau * s.exp() * s.exp_m1();
            let e3 = (3.0 * s).exp();
            ((e3 - 1.0) / denom, (e3 + 1.0) / denom)
        }
    };
    Ok(StabilityInterval {
        method,
        lambda_tau: s,
        eps_lo,
        eps_hi,
    })
}

/// Exponential convergence rate `ln|α| / (mτ)`; `-∞` for the deadbeat design.
pub fn convergence_rate(method: MethodKind, alpha: f64, tau: f64) -> Result<f64> {
    check_positive("tau", tau)?;
    if !(alpha.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "convergence rate needs |alpha| < 1, got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(alpha.abs().ln() / (method.period_multiplier() as f64 * tau))
}

/// Controller parameters with the induced multiplier attached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlParams {
    pub method: MethodKind,
    pub eps: f64,
    pub tau: f64,
    /// `P'(x*)`, recomputed from `(method, λ, eps, tau)`.
    pub alpha: f64,
}

impl ControlParams {
    pub fn from_eps(method: MethodKind, lambda: f64, eps: f64, tau: f64) -> Result<Self> {
        let alpha = alpha_from_eps(method, lambda, eps, tau)?;
        Ok(ControlParams {
            method,
            eps,
            tau,
            alpha,
        })
    }

    /// Designs the gain for a target multiplier. The stored `alpha` is the
    /// multiplier of the rounded gain, which differs from the target by the
    /// conditioning of the affine map (negligible unless λτ is large).
    pub fn from_alpha(method: MethodKind, lambda: f64, alpha: f64, tau: f64) -> Result<Self> {
        let eps = eps_from_alpha(method, lambda, alpha, tau)?;
        Self::from_eps(method, lambda, eps, tau)
    }

    pub fn is_stabilizing(&self) -> bool {
        self.alpha.abs() < 1.0
    }
}

/// Lower edge of the optimal-delay search in units of `1/λ`.
const TAU_STAR_LO: f64 = 1e-6;
/// Upper edge of the optimal-delay search in units of `1/λ`.
const TAU_STAR_HI: f64 = 10.0;
/// Subdivisions used to locate sign changes before bisecting.
const TAU_STAR_SCAN: usize = 4000;

/// Minimizer of the design gain over τ for a fixed multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauStar {
    pub tau: f64,
    /// `τ - RHS(τ)` of the fixed-point form.
    pub residual: f64,
    /// Objective value at `tau`: `|ε|` (velocity) or `ε/λ` (states).
    pub objective: f64,
}

/// Quantity minimized by [`tau_star`]: `|ε|` for velocity, `ε/λ` for states.
pub fn tau_star_objective(method: MethodKind, lambda: f64, alpha: f64, tau: f64) -> Result<f64> {
    let eps = eps_from_alpha(method, lambda, alpha, tau)?;
    Ok(match method {
        MethodKind::Velocity => eps.abs(),
        MethodKind::States => eps / lambda,
    })
}

/// Right-hand side of the fixed-point equation `λτ = RHS(λτ)`.
fn fixed_point_rhs(method: MethodKind, alpha: f64, s: f64) -> f64 {
    match method {
        MethodKind::Velocity => 1.0 - 2.0 * alpha / (alpha + (2.0 * s).exp()),
        MethodKind::States => {
            let (e1, e2, e3, em1) = (s.exp(), (2.0 * s).exp(), (3.0 * s).exp(), (-s).exp());
            (e2 - alpha * em1) * (e1 - 1.0) / (e3 - 2.0 * e2 - alpha * em1 + 2.0 * alpha)
        }
    }
}

/// Fixed-point equation with its denominator cleared. Its sign equals the
/// sign of the objective's derivative in `s = λτ`, and it has no poles.
fn cleared_residual(method: MethodKind, alpha: f64, s: f64) -> f64 {
    match method {
        MethodKind::Velocity => {
            let e2 = (2.0 * s).exp();
            s * (alpha + e2) - (e2 - alpha)
        }
        MethodKind::States => {
            let (e2, e3, em1) = ((2.0 * s).exp(), (3.0 * s).exp(), (-s).exp());
            let den = e3 - 2.0 * e2 - alpha * em1 + 2.0 * alpha;
            let num = (e2 - alpha * em1) * s.exp_m1();
            s * den - num
        }
    }
}

/// Residual `τ - (1/λ)·RHS(λτ)` of the optimal-delay fixed-point equation.
pub fn tau_star_residual(method: MethodKind, lambda: f64, alpha: f64, tau: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("tau", tau)?;
    Ok(tau - fixed_point_rhs(method, alpha, lambda * tau) / lambda)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Delay minimizing the design gain for a fixed multiplier.
///
/// Scans `λτ ∈ (1e-6, 10)` for sign changes of the cleared fixed-point
/// residual and bisects the bracket. More than one sign change is reported as
/// [`Error::MultipleRoots`] rather than picking one.
pub fn tau_star(method: MethodKind, lambda: f64, alpha: f64) -> Result<TauStar> {
    check_positive("lambda", lambda)?;
    if !(alpha.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tau* needs |alpha| < 1, got {alpha}"
        )));
    }
    let g = |s: f64| cleared_residual(method, alpha, s);
    let ratio = (TAU_STAR_HI / TAU_STAR_LO).powf(1.0 / TAU_STAR_SCAN as f64);
    let mut roots = Vec::new();
    let mut s_prev = TAU_STAR_LO;
    let mut g_prev = g(s_prev);
    for k in 1..=TAU_STAR_SCAN {
        let s = if k == TAU_STAR_SCAN {
            TAU_STAR_HI
        } else {
            TAU_STAR_LO * ratio.powi(k as i32)
        };
        let g_cur = g(s);
        if g_cur == 0.0 {
            roots.push(s);
        } else if g_prev != 0.0 && (g_prev < 0.0) != (g_cur < 0.0) {
            roots.push(bisect(g, s_prev, s));
        }
        s_prev = s;
        g_prev = g_cur;
    }
    match roots.len() {
        0 => Err(Error::NoBracket {
            lo: TAU_STAR_LO / lambda,
            hi: TAU_STAR_HI / lambda,
        }),
        1 => {
            let tau = roots[0] / lambda;
            Ok(TauStar {
                tau,
                residual: tau_star_residual(method, lambda, alpha, tau)?,
                objective: tau_star_objective(method, lambda, alpha, tau)?,
            })
        }
        _ => Err(Error::MultipleRoots {
            roots: roots.into_iter().map(|s| s / lambda).collect(),
        }),
    }
}

/// Everything the design formulas say about one `(method, λ, τ, ε)` choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub method: MethodKind,
    pub lambda: f64,
    pub tau: f64,
    pub eps: f64,
    pub alpha: f64,
    /// `None` when `|alpha| >= 1` (no convergence); `-∞` for deadbeat.
    pub beta: Option<f64>,
    pub interval: StabilityInterval,
    /// Optimal delay for this `alpha`, when one exists.
    pub tau_star: Option<f64>,
}

impl DesignReport {
    pub fn new(lambda: f64, params: &ControlParams) -> Result<Self> {
        let interval = stability_interval(params.method, lambda, params.tau)?;
        let beta = convergence_rate(params.method, params.alpha, params.tau).ok();
        let tau_star = tau_star(params.method, lambda, params.alpha)
            .ok()
            .map(|t| t.tau);
        Ok(DesignReport {
            method: params.method,
            lambda,
            tau: params.tau,
            eps: params.eps,
            alpha: params.alpha,
            beta,
            interval,
            tau_star,
        })
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use MethodKind::{States, Velocity};

    // Reference values below were evaluated with 40-digit arithmetic.

    #[test]
    fn alpha_without_control_is_free_growth() {
        assert_abs_diff_eq!(
            alpha_from_eps(Velocity, 2.0, 0.0, 0.2).unwrap(),
            2.225_540_928_492_467_6,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            alpha_from_eps(States, 2.0, 0.0, 0.2).unwrap(),
            3.320_116_922_736_547_5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn alpha_at_rounded_gain() {
        // exact multiplier of ε = -4.399886 is -0.40000251214995571
        let a = alpha_from_eps(Velocity, 2.0, -4.399886, 0.2).unwrap();
        assert_abs_diff_eq!(a, -0.4, epsilon = 1e-5);
        assert_abs_diff_eq!(a, -0.400_002_512_149_955_71, epsilon = 1e-13);
    }

    #[test]
    fn gains_for_reference_multipliers() {
        assert_abs_diff_eq!(
            eps_from_alpha(Velocity, 2.0, 0.0, 0.2).unwrap(),
            -3.729_561_744_103_175_8,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            eps_from_alpha(Velocity, 2.0, 0.8, 0.2).unwrap(),
            -2.388_921_652_031_897_2,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            eps_from_alpha(Velocity, 2.0, -0.4, 0.2).unwrap(),
            -4.399_881_790_138_815_1,
            epsilon = 1e-13
        );
        assert_abs_diff_eq!(
            eps_from_alpha(States, 2.0, -0.4, 0.2).unwrap(),
            25.351_196_868_173_227,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            eps_from_alpha(States, 2.0, 0.0, 0.2).unwrap(),
            22.625_347_396_805_033,
            epsilon = 1e-12
        );
    }

    #[test]
    fn intervals_at_lambda_tau_point_four() {
        let v = stability_interval(Velocity, 2.0, 0.2).unwrap();
        assert_abs_diff_eq!(v.eps_lo, -5.405_361_859_192_274, epsilon = 1e-13);
        assert_abs_diff_eq!(v.eps_hi, -2.053_761_629_014_077_5, epsilon = 1e-13);
        let s = stability_interval(States, 2.0, 0.2).unwrap();
        assert_abs_diff_eq!(s.eps_lo, 15.810_723_718_384_548, epsilon = 1e-12);
        assert_abs_diff_eq!(s.eps_hi, 29.439_971_075_225_519, epsilon = 1e-12);
    }

    #[test]
    fn interval_ends_are_unit_multipliers() {
        for method in MethodKind::ALL {
            for (lambda, tau) in [(2.0, 0.05), (2.0, 0.2), (1.0, 1.0), (0.5, 4.0)] {
                let iv = stability_interval(method, lambda, tau).unwrap();
                let plus = eps_from_alpha(method, lambda, 1.0, tau).unwrap();
                let minus = eps_from_alpha(method, lambda, -1.0, tau).unwrap();
                let (lo, hi) = if plus < minus {
                    (plus, minus)
                } else {
                    (minus, plus)
                };
                assert_abs_diff_eq!(iv.eps_lo, lo, epsilon = 1e-12);
                assert_abs_diff_eq!(iv.eps_hi, hi, epsilon = 1e-12);
                assert!(iv.contains(eps_from_alpha(method, lambda, 0.0, tau).unwrap()));
            }
        }
    }

    #[test]
    fn rates() {
        assert_abs_diff_eq!(
            convergence_rate(Velocity, -0.4, 0.2).unwrap(),
            -2.290_726_829_685_387_7,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            convergence_rate(States, -0.4, 0.2).unwrap(),
            -1.527_151_219_790_258_4,
            epsilon = 1e-14
        );
        assert_eq!(
            convergence_rate(Velocity, 0.0, 0.2).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(convergence_rate(Velocity, 1.0, 0.2).is_err());
        assert!(convergence_rate(Velocity, -1.5, 0.2).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(alpha_from_eps(Velocity, 0.0, 1.0, 0.2).is_err());
        assert!(alpha_from_eps(Velocity, 2.0, 1.0, -0.2).is_err());
        assert!(eps_from_alpha(States, -1.0, 0.0, 0.2).is_err());
        assert!(stability_interval(States, 2.0, 0.0).is_err());
        assert!(tau_star(Velocity, 2.0, 1.0).is_err());
    }

    #[test]
    fn tau_star_deadbeat_velocity() {
        let ts = tau_star(Velocity, 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(ts.tau, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn tau_star_residuals() {
        let ts = tau_star(Velocity, 1.0, -0.4).unwrap();
        assert!(ts.residual.abs() < 1e-10);
        let ts = tau_star(States, 1.0, 0.0).unwrap();
        assert!(ts.residual.abs() < 1e-10);
    }

    #[test]
    fn tau_star_is_grid_minimal() {
        for method in MethodKind::ALL {
            for lambda in [0.5, 1.0, 2.0] {
                for alpha in [-0.8, -0.4, 0.0, 0.4, 0.8] {
                    let ts = tau_star(method, lambda, alpha).unwrap();
                    let (lo, hi) = (ts.tau / 10.0, ts.tau * 10.0);
                    for k in 0..2000 {
                        let tau = lo + (hi - lo) * k as f64 / 1999.0;
                        let v = tau_star_objective(method, lambda, alpha, tau).unwrap();
                        assert!(
                            v >= ts.objective - 1e-9,
                            "{method} λ={lambda} α={alpha} τ={tau}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rate_grows_with_tau() {
        for method in MethodKind::ALL {
            for alpha in [-0.8, -0.4, 0.4, 0.8] {
                let mut prev = f64::NEG_INFINITY;
                for k in 1..50 {
                    let beta = convergence_rate(method, alpha, 0.05 * k as f64).unwrap();
                    assert!(beta > prev);
                    prev = beta;
                }
            }
        }
    }

    #[test]
    fn design_report_consistency() {
        let p = ControlParams::from_alpha(States, 2.0, 0.0, 0.2).unwrap();
        let r = DesignReport::new(2.0, &p).unwrap();
        assert!(r.interval.contains(r.eps));
        assert_eq!(r.beta, Some(f64::NEG_INFINITY));
        let unstable = ControlParams::from_eps(Velocity, 2.0, -1.0, 0.2).unwrap();
        let r = DesignReport::new(2.0, &unstable).unwrap();
        assert!(!r.interval.contains(r.eps));
        assert!(r.beta.is_none());
    }

    proptest! {
        #[test]
        fn affine_in_eps(lambda in 0.1f64..2.0, tau in 0.01f64..1.0, eps in -50.0f64..50.0) {
            for method in MethodKind::ALL {
                let a = |e: f64| alpha_from_eps(method, lambda, e, tau).unwrap();
                let h = 0.25;
                let second = a(eps + h) - 2.0 * a(eps) + a(eps - h);
                prop_assert!(second.abs() <= 1e-12, "second difference {second:e}");
            }
        }

        #[test]
        fn inside_interval_iff_contracting(lambda in 0.1f64..4.0, tau in 0.01f64..1.0, t in -0.3f64..1.3) {
            for method in MethodKind::ALL {
                let iv = stability_interval(method, lambda, tau).unwrap();
                prop_assert!(iv.eps_lo < iv.eps_hi);
                let eps = iv.eps_lo + t * iv.width();
                let alpha = alpha_from_eps(method, lambda, eps, tau).unwrap();
                // skip points within rounding of the edges
                if (alpha.abs() - 1.0).abs() > 1e-9 {
                    prop_assert_eq!(iv.contains(eps), alpha.abs() < 1.0);
                }
            }
        }
    }
}
