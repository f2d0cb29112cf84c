//! On/off gain schedules.
//!
//! Time is split into τ-subintervals `[jτ, (j+1)τ)`. A schedule period holds
//! `period_multiplier` of them and the gain is on only during the last one.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    /// Delayed-velocity feedback, period 2τ, active on `[(2k+1)τ, (2k+2)τ)`.
    Velocity,
    /// Two-delayed-states feedback, period 3τ, active on `[(3k+2)τ, (3k+3)τ)`.
    States,
}

impl MethodKind {
    pub const ALL: [MethodKind; 2] = [MethodKind::Velocity, MethodKind::States];

    /// Number of τ-subintervals per schedule period.
    pub const fn period_multiplier(self) -> usize {
        match self {
            MethodKind::Velocity => 2,
            MethodKind::States => 3,
        }
    }

    /// Zero-based index of the active subinterval within a period.
    pub const fn active_subinterval(self) -> usize {
        self.period_multiplier() - 1
    }

    /// Whether subinterval `j` (counted from t = 0) has the gain on.
    #[inline]
    pub const fn is_active_subinterval(self, j: usize) -> bool {
        j % self.period_multiplier() == self.active_subinterval()
    }

    /// Whether grid node `i` on a grid with `steps_per_tau` nodes per τ lies in
    /// an active subinterval. Boundary nodes belong to the subinterval they open.
    #[inline]
    pub const fn is_active_node(self, i: usize, steps_per_tau: usize) -> bool {
        self.is_active_subinterval(i / steps_per_tau)
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            MethodKind::Velocity => "velocity",
            MethodKind::States => "states",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "velocity" | "I" | "1" => Ok(MethodKind::Velocity),
            "states" | "II" | "2" => Ok(MethodKind::States),
            other => Err(Error::InvalidParameter(format!(
                "unknown method `{other}` (expected velocity or states)"
            ))),
        }
    }
}

/// Gain ε(t): `eps` on the active subinterval, 0 elsewhere.
pub fn gain_at(method: MethodKind, eps: f64, tau: f64, t: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::TimeOutOfRange(t));
    }
    let j = (t / tau).floor() as usize;
    Ok(if method.is_active_subinterval(j) {
        eps
    } else {
        0.0
    })
}
