//! Boundary-aligned fixed-step integration of the switched delay systems.
//!
//! The step is `dt = τ/N`, so every schedule boundary and every delay (τ, 2τ)
//! lands on a grid node and no step straddles a switch. Each step is a
//! classical RK4 step. Delayed quantities are read from the stored history:
//! node values directly, half-step values through the cubic Hermite
//! interpolant built from node states and node slopes.
//!
//! Every delayed read falls in a passive subinterval, where `x' = f(x)`
//! holds exactly, so the delayed velocity is `f(x(t - τ))` and no derivative
//! of the stored states is ever formed.

use crate::design::{alpha_from_eps, ControlParams};
use crate::error::{Error, Result};
use crate::schedule::MethodKind;
use crate::system::SystemSpec;

pub const DEFAULT_STEPS_PER_TAU: usize = 256;
pub const MIN_STEPS_PER_TAU: usize = 16;
/// Largest `|x - x*|` tolerated before a run is reported as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Grid nodes per τ; `dt = τ / steps_per_tau`.
    pub steps_per_tau: usize,
    /// Number of schedule periods to simulate.
    pub periods: usize,
    /// Initial state in the user frame.
    pub x0: f64,
}

impl SimConfig {
    pub fn new(x0: f64, periods: usize) -> Self {
        SimConfig {
            steps_per_tau: DEFAULT_STEPS_PER_TAU,
            periods,
            x0,
        }
    }

    pub fn with_steps_per_tau(mut self, steps_per_tau: usize) -> Self {
        self.steps_per_tau = steps_per_tau;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.steps_per_tau < MIN_STEPS_PER_TAU {
            return Err(Error::InvalidParameter(format!(
                "steps_per_tau must be at least {MIN_STEPS_PER_TAU}, got {}",
                self.steps_per_tau
            )));
        }
        if self.periods == 0 {
            return Err(Error::InvalidParameter("periods must be at least 1".into()));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "x0 must be finite, got {}",
                self.x0
            )));
        }
        Ok(())
    }
}

/// The additive feedback term applied while the gain is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackLaw {
    /// `ε x'(t - τ)` on the two-subinterval schedule.
    DelayedVelocity,
    /// `ε (x(t - 2τ) - x(t - τ))` on the three-subinterval schedule.
    DelayedStateDifference,
    /// `ε (x(t - τ) - x(t))` on the two-subinterval schedule. Cannot
    /// stabilize; kept for the counterexample sweep.
    CurrentMinusDelayed,
}

impl FeedbackLaw {
    pub fn for_method(method: MethodKind) -> Self {
        match method {
            MethodKind::Velocity => FeedbackLaw::DelayedVelocity,
            MethodKind::States => FeedbackLaw::DelayedStateDifference,
        }
    }

    pub fn schedule(self) -> MethodKind {
        match self {
            FeedbackLaw::DelayedVelocity | FeedbackLaw::CurrentMinusDelayed => MethodKind::Velocity,
            FeedbackLaw::DelayedStateDifference => MethodKind::States,
        }
    }
}

/// How the delayed velocity `x'(t - τ)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocitySource {
    /// `f(x(t - τ))`, exact on passive subintervals.
    #[default]
    Field,
    /// Second-order finite differences of stored states. Only useful as a
    /// consistency check of the `Field` route.
    FiniteDifference,
}

/// Solution on the uniform grid `t_i = i·dt`, `i = 0..=K·m·N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    spec: SystemSpec,
    law: FeedbackLaw,
    eps: f64,
    tau: f64,
    alpha: Option<f64>,
    steps_per_tau: usize,
    periods: usize,
    dt: f64,
    times: Vec<f64>,
    states: Vec<f64>,
    deviations: Vec<f64>,
    rhs: Vec<f64>,
    rhs_left: Vec<f64>,
    control: Vec<f64>,
}

impl Trajectory {
    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn law(&self) -> FeedbackLaw {
        self.law
    }

    pub fn method(&self) -> MethodKind {
        self.law.schedule()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Analytic multiplier, when the law has one.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn steps_per_tau(&self) -> usize {
        self.steps_per_tau
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn x0(&self) -> f64 {
        self.states[0]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// States in the user frame.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `x_i - x*`.
    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    /// Total right-hand side at each node, taken on the subinterval the node opens.
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Additive control term at each node.
    pub fn control(&self) -> &[f64] {
        &self.control
    }

    /// Whether the gain is on at node `i`.
    pub fn is_active(&self, i: usize) -> bool {
        self.method().is_active_node(i, self.steps_per_tau)
    }

    /// Node index of the start of period `k`.
    pub fn period_node(&self, k: usize) -> usize {
        k * self.method().period_multiplier() * self.steps_per_tau
    }

    /// Deviations `x(k·mτ) - x*` for `k = 0..=periods`.
    pub fn period_samples(&self) -> Vec<f64> {
        (0..=self.periods)
            .map(|k| self.deviations[self.period_node(k)])
            .collect()
    }

    fn hermite(&self, i: usize, theta: f64) -> f64 {
        hermite(
            self.states[i],
            self.states[i + 1],
            self.rhs[i],
            self.rhs_left[i + 1],
            self.dt,
            theta,
        )
    }
}

#[inline]
fn hermite(x0: f64, x1: f64, s0: f64, s1: f64, h: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * x0 + h10 * h * s0 + h01 * x1 + h11 * h * s1
}

#[inline]
fn hermite_mid(x0: f64, x1: f64, s0: f64, s1: f64, h: f64) -> f64 {
    0.5 * (x0 + x1) + 0.125 * h * (s0 - s1)
}

/// Stage position inside a step.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Stage {
    Start,
    Mid,
    End,
}

struct Integrator<'a> {
    spec: &'a SystemSpec,
    law: FeedbackLaw,
    source: VelocitySource,
    method: MethodKind,
    eps: f64,
    n: usize,
    h: f64,
    dev: Vec<f64>,
    rhs: Vec<f64>,
    rhs_left: Vec<f64>,
}

impl Integrator<'_> {
    /// Delayed deviation at node `j` + stage offset.
    #[inline]
    fn history(&self, j: usize, stage: Stage) -> f64 {
        match stage {
            Stage::Start => self.dev[j],
            Stage::End => self.dev[j + 1],
            Stage::Mid => hermite_mid(
                self.dev[j],
                self.dev[j + 1],
                self.rhs[j],
                self.rhs_left[j + 1],
                self.h,
            ),
        }
    }

    fn delayed_velocity(&self, j: usize, stage: Stage) -> f64 {
        match self.source {
            VelocitySource::Field => self.spec.shifted(self.history(j, stage)),
            VelocitySource::FiniteDifference => {
                // passive subinterval holding [j, j+1] spans nodes a..=a+n
                let a = (j / self.n) * self.n;
                let d = &self.dev;
                let h = self.h;
                let at_node = |k: usize| {
                    if k > a && k < a + self.n {
                        (d[k + 1] - d[k - 1]) / (2.0 * h)
                    } else if k == a {
                        (-3.0 * d[k] + 4.0 * d[k + 1] - d[k + 2]) / (2.0 * h)
                    } else {
                        (3.0 * d[k] - 4.0 * d[k - 1] + d[k - 2]) / (2.0 * h)
                    }
                };
                match stage {
                    Stage::Start => at_node(j),
                    Stage::End => at_node(j + 1),
                    Stage::Mid => (d[j + 1] - d[j]) / h,
                }
            }
        }
    }

    /// Control term for step `i` at the given stage and trial deviation `y`.
    #[inline]
    fn control(&self, i: usize, stage: Stage, y: f64) -> f64 {
        if !self.method.is_active_node(i, self.n) {
            return 0.0;
        }
        let n = self.n;
        match self.law {
            FeedbackLaw::DelayedVelocity => self.eps * self.delayed_velocity(i - n, stage),
            FeedbackLaw::DelayedStateDifference => {
                self.eps * (self.history(i - 2 * n, stage) - self.history(i - n, stage))
            }
            FeedbackLaw::CurrentMinusDelayed => self.eps * (self.history(i - n, stage) - y),
        }
    }

    #[inline]
    fn field(&self, i: usize, stage: Stage, y: f64) -> f64 {
        self.spec.shifted(y) + self.control(i, stage, y)
    }
}

/// Integrates the controlled system over `cfg.periods` schedule periods.
pub fn simulate(spec: &SystemSpec, params: &ControlParams, cfg: &SimConfig) -> Result<Trajectory> {
    let expected = alpha_from_eps(params.method, spec.lambda(), params.eps, params.tau)?;
    if (expected - params.alpha).abs() > 1e-9 * (1.0 + expected.abs()) {
        return Err(Error::InvalidParameter(format!(
            "control parameters were designed for a different λ: alpha {} vs {} at λ = {}",
            params.alpha,
            expected,
            spec.lambda()
        )));
    }
    let mut traj = simulate_law(
        spec,
        FeedbackLaw::for_method(params.method),
        params.eps,
        params.tau,
        cfg,
        VelocitySource::Field,
    )?;
    traj.alpha = Some(params.alpha);
    Ok(traj)
}

/// Integrates an arbitrary feedback law with gain `eps` and delay `tau`.
pub fn simulate_law(
    spec: &SystemSpec,
    law: FeedbackLaw,
    eps: f64,
    tau: f64,
    cfg: &SimConfig,
    source: VelocitySource,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be finite, got {eps}"
        )));
    }
    let method = law.schedule();
    let n = cfg.steps_per_tau;
    let steps = cfg.periods * method.period_multiplier() * n;
    let h = tau / n as f64;
    let x_star = spec.x_star();

    let mut it = Integrator {
        spec,
        law,
        source,
        method,
        eps,
        n,
        h,
        dev: Vec::with_capacity(steps + 1),
        rhs: Vec::with_capacity(steps + 1),
        rhs_left: Vec::with_capacity(steps + 1),
    };
    let mut control = Vec::with_capacity(steps + 1);

    let y0 = cfg.x0 - x_star;
    check_bound(0.0, y0)?;
    it.dev.push(y0);
    // no step ends at node 0; its left slope is never read
    it.rhs_left.push(f64::NAN);

    for i in 0..steps {
        let y = it.dev[i];
        let u = it.control(i, Stage::Start, y);
        let k1 = spec.shifted(y) + u;
        control.push(u);
        it.rhs.push(k1);

        let k2 = it.field(i, Stage::Mid, y + 0.5 * h * k1);
        let k3 = it.field(i, Stage::Mid, y + 0.5 * h * k2);
        let k4 = it.field(i, Stage::End, y + h * k3);
        let y_next = y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        check_bound((i + 1) as f64 * h, y_next)?;

        let left = it.field(i, Stage::End, y_next);
        it.dev.push(y_next);
        it.rhs_left.push(left);
    }
    // the final node opens a passive subinterval
    let y_last = it.dev[steps];
    let u_last = it.control(steps, Stage::Start, y_last);
    control.push(u_last);
    it.rhs.push(spec.shifted(y_last) + u_last);

    let times = (0..=steps).map(|i| i as f64 * h).collect();
    let states = it.dev.iter().map(|d| x_star + d).collect();
    Ok(Trajectory {
        spec: spec.clone(),
        law,
        eps,
        tau,
        alpha: None,
        steps_per_tau: n,
        periods: cfg.periods,
        dt: h,
        times,
        states,
        deviations: it.dev,
        rhs: it.rhs,
        rhs_left: it.rhs_left,
        control,
    })
}

fn check_bound(t: f64, y: f64) -> Result<()> {
    if y.abs() <= DIVERGENCE_BOUND {
        Ok(())
    } else {
        Err(Error::Diverged {
            t,
            deviation: y.abs(),
        })
    }
}

/// `(t_i, u_i)` pairs of the stored control term.
pub fn control_signal(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .copied()
        .zip(traj.control.iter().copied())
        .collect()
}

/// State at an arbitrary time: the node value on nodes, the cubic Hermite
/// interpolant between them.
pub fn state_at(traj: &Trajectory, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= traj.horizon()) {
        return Err(Error::TimeOutOfRange(t));
    }
    let last = traj.len() - 1;
    let nearest = ((t / traj.dt).round() as usize).min(last);
    if traj.times[nearest] == t {
        return Ok(traj.states[nearest]);
    }
    let i = ((t / traj.dt).floor() as usize).min(last - 1);
    let theta = ((t - traj.times[i]) / traj.dt).clamp(0.0, 1.0);
    Ok(traj.hermite(i, theta))
}
