//! Plant descriptions.
//!
//! A [`SystemSpec`] pairs a scalar vector field with one of its unstable
//! equilibria. Internally every computation runs in the shifted coordinate
//! `δ = x - x*`, so the field seen by the integrator is `g(δ) = f(x* + δ)`.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance on `|f(x*)|` accepted by [`make_system`].
const EQUILIBRIUM_TOL: f64 = 1e-12;

/// Closed registry of vector fields.
///
/// The builtins carry their linear coefficient `slope`; at `x = 0` it is the
/// linearization slope λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plant {
    /// `slope·x`
    Linear { slope: f64 },
    /// `slope·x + x²`
    Quad { slope: f64 },
    /// `slope·x + x³`
    CubicPlus { slope: f64 },
    /// `slope·x - x³`
    CubicMinus { slope: f64 },
    /// `slope·x + sin²(x)`
    SinSq { slope: f64 },
    /// `c₀ + c₁x + c₂x² + …`, coefficients in ascending order.
    Polynomial { coeffs: Vec<f64> },
}

impl Plant {
    /// Parses a builtin name (`linear`, `quad`, `cubic_plus`, `cubic_minus`,
    /// `sinsq`) with the given linear coefficient.
    pub fn builtin(name: &str, slope: f64) -> Result<Self> {
        let plant = match name {
            "linear" => Plant::Linear { slope },
            "quad" => Plant::Quad { slope },
            "cubic_plus" => Plant::CubicPlus { slope },
            "cubic_minus" => Plant::CubicMinus { slope },
            "sinsq" => Plant::SinSq { slope },
            other => {
                return Err(Error::InvalidParameter(format!(
                "unknown plant `{other}` (expected linear, quad, cubic_plus, cubic_minus, sinsq)"
            )))
            }
        };
        Ok(plant)
    }

    /// The five builtins with the same linear coefficient.
    pub fn builtins(slope: f64) -> [Plant; 5] {
        [
            Plant::Linear { slope },
            Plant::Quad { slope },
            Plant::CubicPlus { slope },
            Plant::CubicMinus { slope },
            Plant::SinSq { slope },
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Plant::Linear { .. } => "linear",
            Plant::Quad { .. } => "quad",
            Plant::CubicPlus { .. } => "cubic_plus",
            Plant::CubicMinus { .. } => "cubic_minus",
            Plant::SinSq { .. } => "sinsq",
            Plant::Polynomial { .. } => "polynomial",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Plant::Linear { slope } => slope * x,
            Plant::Quad { slope } => slope * x + x * x,
            Plant::CubicPlus { slope } => slope * x + x * x * x,
            Plant::CubicMinus { slope } => slope * x - x * x * x,
            Plant::SinSq { slope } => {
                let s = x.sin();
                slope * x + s * s
            }
            Plant::Polynomial { ref coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
        }
    }

    /// Exact derivative `f'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Plant::Linear { slope } => slope,
            Plant::Quad { slope } => slope + 2.0 * x,
            Plant::CubicPlus { slope } => slope + 3.0 * x * x,
            Plant::CubicMinus { slope } => slope - 3.0 * x * x,
            Plant::SinSq { slope } => slope + (2.0 * x).sin(),
            Plant::Polynomial { ref coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
        }
    }
}

impl fmt::Display for Plant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Plant::Linear { slope } => write!(f, "{slope}x"),
            Plant::Quad { slope } => write!(f, "{slope}x+x^2"),
            Plant::CubicPlus { slope } => write!(f, "{slope}x+x^3"),
            Plant::CubicMinus { slope } => write!(f, "{slope}x-x^3"),
            Plant::SinSq { slope } => write!(f, "{slope}x+sin^2(x)"),
            Plant::Polynomial { coeffs } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| match k {
                        0 => format!("{c}"),
                        1 => format!("{c}x"),
                        _ => format!("{c}x^{k}"),
                    })
                    .collect();
                write!(f, "{}", terms.join("+"))
            }
        }
    }
}

/// A plant together with an unstable equilibrium and its linearization slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    plant: Plant,
    x_star: f64,
    lambda: f64,
}

impl SystemSpec {
    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `f(x)` in the user frame.
    pub fn eval(&self, x: f64) -> f64 {
        self.plant.eval(x)
    }

    /// `g(δ) = f(x* + δ)`, the field in the shifted frame.
    #[inline]
    pub fn shifted(&self, delta: f64) -> f64 {
        self.plant.eval(self.x_star + delta)
    }
}

/// Builds a [`SystemSpec`], checking that `x_star` is an equilibrium with a
/// positive slope.
pub fn make_system(plant: Plant, x_star: f64) -> Result<SystemSpec> {
    if !x_star.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "x* must be finite, got {x_star}"
        )));
    }
    if let Plant::Polynomial { coeffs } = &plant {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial coefficients must be a non-empty list of finite values".into(),
            ));
        }
    }
    let residual = plant.eval(x_star);
    if !(residual.abs() < EQUILIBRIUM_TOL) {
        return Err(Error::NotAnEquilibrium { x_star, residual });
    }
    let lambda = plant.derivative(x_star);
    if !(lambda > 0.0) {
        return Err(Error::NotUnstable { lambda });
    }
    Ok(SystemSpec {
        plant,
        x_star,
        lambda,
    })
}

/// `f(x)` for a spec; thin alias of [`SystemSpec::eval`].
pub fn eval_f(spec: &SystemSpec, x: f64) -> f64 {
    spec.eval(x)
}
