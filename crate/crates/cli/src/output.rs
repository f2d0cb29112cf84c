//! File formats: trajectory CSV/JSON, raster and boundary CSV, design JSON.
//!
//! Floats in CSV use 17 significant digits (`{:.16e}`), which round-trips
//! every `f64` exactly.

use serde::Serialize;
use std::io::{self, Write};

use odfc_core::{stability_interval, Raster, Trajectory};

pub const TRAJECTORY_HEADER: &str = "t,x,u,segment_active";
pub const RASTER_HEADER: &str =
    "lambda_tau,eps_norm,analytic_stable,empirical_stable,analytic_alpha";
pub const BOUNDARY_HEADER: &str = "lambda_tau,eps_lo,eps_hi";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// 17-significant-digit decimal.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt_bool(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct TrajectoryMetadata {
    method: &'static str,
    law: &'static str,
    plant: &'static str,
    field: String,
    x_star: f64,
    lambda: f64,
    tau: f64,
    eps: f64,
    alpha: Option<f64>,
    steps_per_tau: usize,
    periods: usize,
    x0: f64,
}

#[derive(Debug, Serialize)]
struct TrajectoryJson<'a> {
    metadata: TrajectoryMetadata,
    t: &'a [f64],
    x: &'a [f64],
    u: &'a [f64],
    segment_active: Vec<u8>,
}

fn law_name(traj: &Trajectory) -> &'static str {
    use odfc_core::FeedbackLaw::*;
    match traj.law() {
        DelayedVelocity => "delayed_velocity",
        DelayedStateDifference => "delayed_state_difference",
        CurrentMinusDelayed => "current_minus_delayed",
    }
}

/// Writes a trajectory as CSV (`t,x,u,segment_active`) or JSON.
pub fn emit_trajectory<W: Write>(traj: &Trajectory, mut out: W, format: Format) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{TRAJECTORY_HEADER}")?;
            for i in 0..traj.len() {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(traj.times()[i]),
                    fmt_f64(traj.states()[i]),
                    fmt_f64(traj.control()[i]),
                    u8::from(traj.is_active(i))
                )?;
            }
        }
        Format::Json => {
            let spec = traj.spec();
            let doc = TrajectoryJson {
                metadata: TrajectoryMetadata {
                    method: traj.method().as_str(),
                    law: law_name(traj),
                    plant: spec.plant().name(),
                    field: spec.plant().to_string(),
                    x_star: spec.x_star(),
                    lambda: spec.lambda(),
                    tau: traj.tau(),
                    eps: traj.eps(),
                    alpha: traj.alpha(),
                    steps_per_tau: traj.steps_per_tau(),
                    periods: traj.periods(),
                    x0: traj.x0(),
                },
                t: traj.times(),
                x: traj.states(),
                u: traj.control(),
                segment_active: (0..traj.len())
                    .map(|i| u8::from(traj.is_active(i)))
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut out, &doc).map_err(io::Error::other)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// One parsed row of a trajectory CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub u: f64,
    pub segment_active: bool,
}

/// Parses the CSV written by [`emit_trajectory`].
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TRAJECTORY_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(format!(
                    "line {}: expected 4 fields, got {}",
                    n + 2,
                    fields.len()
                ));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2));
            Ok(TrajectoryRow {
                t: num(fields[0])?,
                x: num(fields[1])?,
                u: num(fields[2])?,
                segment_active: match fields[3] {
                    "0" => false,
                    "1" => true,
                    other => return Err(format!("line {}: bad segment flag `{other}`", n + 2)),
                },
            })
        })
        .collect()
}

pub fn emit_raster<W: Write>(raster: &Raster, mut out: W) -> io::Result<()> {
    writeln!(out, "{RASTER_HEADER}")?;
    for c in &raster.cells {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(c.lambda_tau),
            fmt_f64(c.eps_norm),
            fmt_opt_bool(c.analytic_stable),
            fmt_opt_bool(c.empirical_stable),
            fmt_opt_f64(c.analytic_alpha)
        )?;
    }
    Ok(())
}

/// Stability-interval edges (raw `ε`) at each λτ of the raster axis.
pub fn emit_boundary<W: Write>(raster: &Raster, mut out: W) -> io::Result<()> {
    writeln!(out, "{BOUNDARY_HEADER}")?;
    for &lt in &raster.axes.lambda_tau {
        let iv = stability_interval(raster.method, raster.lambda, lt / raster.lambda)
            .map_err(io::Error::other)?;
        writeln!(
            out,
            "{},{},{}",
            fmt_f64(lt),
            fmt_f64(iv.eps_lo),
            fmt_f64(iv.eps_hi)
        )?;
    }
    Ok(())
}

/// Parses rows of numeric CSV with a known header.
pub fn parse_numeric_csv(text: &str, header: &str) -> Result<Vec<Vec<Option<f64>>>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err("unexpected header".into());
    }
    lines
        .map(|line| {
            line.split(',')
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>().map(Some).map_err(|e| e.to_string())
                    }
                })
                .collect()
        })
        .collect()
}

/// `-∞` and other non-finite values have no JSON number form.
pub fn json_number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v == f64::NEG_INFINITY {
        serde_json::json!("-inf")
    } else if v == f64::INFINITY {
        serde_json::json!("inf")
    } else {
        serde_json::json!("nan")
    }
}
