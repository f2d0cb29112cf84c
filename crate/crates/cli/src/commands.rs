use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use odfc_core::{
    check_envelope, convergence_rate, eps_from_alpha, estimate_rate, make_system,
    period_map_derivative, simulate, single_delay_counterexample, stability_interval,
    stability_raster, tau_star, ControlParams, Error as CoreError, MethodKind, Plant, RasterMode,
    SimConfig, SystemSpec, DEFAULT_PROBE_STEP, DEFAULT_STEPS_PER_TAU,
};

use crate::output::{emit_boundary, emit_raster, emit_trajectory, fmt_f64, json_number, Format};

#[derive(Debug, Parser)]
#[command(
    name = "odfc",
    version,
    about = "Oscillating delayed feedback control toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form design: gain, multiplier, rate, stability interval, optimal delay.
    Design(DesignArgs),
    /// Simulate the controlled system and write the trajectory.
    Simulate(SimulateArgs),
    /// Fit the convergence rate and exponential envelope of a simulated run.
    Rate(RateArgs),
    /// Numerical return-map slope at the equilibrium against the closed form.
    Probe(ProbeArgs),
    /// Stability chart over (lambda*tau, gain).
    Region(RegionArgs),
    /// Delay minimizing the design gain for a fixed multiplier.
    Taustar(TauStarArgs),
    /// Sweep of the current-minus-delayed-state scheme.
    Counterexample(CounterexampleArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct GainArgs {
    /// Target return-map multiplier; the gain is derived.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Control gain; the multiplier is derived.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlantArgs {
    /// linear, quad, cubic_plus, cubic_minus, sinsq or poly.
    #[arg(long, default_value = "linear")]
    pub plant: String,
    /// Linear coefficient of the builtin plants (their slope at 0).
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Ascending polynomial coefficients for `--plant poly`, e.g. `-3,2,1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    /// Equilibrium location.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub x_star: f64,
}

impl PlantArgs {
    fn system(&self) -> Result<SystemSpec, CliError> {
        let plant = if self.plant == "poly" {
            Plant::Polynomial {
                coeffs: self.coeffs.clone(),
            }
        } else {
            if !self.coeffs.is_empty() {
                return Err(CliError::Usage(
                    "--coeffs only applies to --plant poly".into(),
                ));
            }
            Plant::builtin(&self.plant, self.lambda)?
        };
        Ok(make_system(plant, self.x_star)?)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Initial state.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub x0: f64,
    /// Schedule periods to simulate.
    #[arg(long, default_value_t = 10)]
    pub periods: usize,
    /// Grid nodes per delay interval.
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_TAU)]
    pub steps_per_tau: usize,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    #[command(flatten)]
    pub gain: GainArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Envelope slack added to / subtracted from |alpha|.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// CSV of `t,abs_x,lower,upper` for plotting the envelope.
    #[arg(long)]
    pub envelope_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, allow_hyphen_values = true)]
    pub tau: f64,
    #[command(flatten)]
    pub gain: GainArgs,
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Central-difference step.
    #[arg(long, default_value_t = DEFAULT_PROBE_STEP, allow_hyphen_values = true)]
    pub h: f64,
    #[arg(long, default_value_t = DEFAULT_STEPS_PER_TAU)]
    pub steps_per_tau: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid size as `NXxNY` (lambda*tau by gain).
    #[arg(long, default_value = "64x64", value_parser = parse_grid)]
    pub grid: (usize, usize),
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub lt_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub lt_max: f64,
    /// Lower gain on the axis (eps, or eps/lambda for states).
    #[arg(long, allow_hyphen_values = true)]
    pub eps_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value = "both")]
    pub mode: RasterMode,
    /// Raster CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Boundary-curve CSV path.
    #[arg(long)]
    pub boundary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TauStarArgs {
    #[arg(long)]
    pub method: MethodKind,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub lambda: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{s}` must look like 64x64"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|e| format!("grid `{s}`: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
    Io(io::Error),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    /// 2 usage / invalid parameters, 3 divergence, 4 numerical failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 5,
            CliError::Core(e) => match e {
                CoreError::Diverged { .. } => 3,
                CoreError::NoBracket { .. }
                | CoreError::MultipleRoots { .. }
                | CoreError::DeadbeatDetected
                | CoreError::InsufficientSamples { .. } => 4,
                _ => 2,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_) => "invalid_parameter",
                CoreError::NotAnEquilibrium { .. } => "not_an_equilibrium",
                CoreError::NotUnstable { .. } => "not_unstable",
                CoreError::TimeOutOfRange(_) => "time_out_of_range",
                CoreError::Diverged { .. } => "diverged",
                CoreError::NoBracket { .. } => "no_bracket",
                CoreError::MultipleRoots { .. } => "multiple_roots",
                CoreError::DeadbeatDetected => "deadbeat_detected",
                CoreError::InsufficientSamples { .. } => "insufficient_samples",
            },
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

/// Resolves `--alpha` / `--eps` into parameters.
fn params_for(
    method: MethodKind,
    lambda: f64,
    tau: f64,
    gain: &GainArgs,
) -> Result<ControlParams, CliError> {
    match (gain.alpha, gain.eps) {
        (Some(alpha), None) => Ok(ControlParams::from_alpha(method, lambda, alpha, tau)?),
        (None, Some(eps)) => Ok(ControlParams::from_eps(method, lambda, eps, tau)?),
        _ => Err(CliError::Usage(
            "exactly one of --alpha or --eps is required".into(),
        )),
    }
}

/// Opens `path`, or falls back to the provided writer.
fn with_output<F>(path: Option<&Path>, stdout: &mut dyn Write, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => f(stdout)?,
    }
    Ok(())
}

fn write_json(
    path: Option<&Path>,
    stdout: &mut dyn Write,
    value: &impl Serialize,
) -> Result<(), CliError> {
    with_output(path, stdout, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

#[derive(Debug, Serialize)]
struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Debug, Serialize)]
struct DesignJson {
    method: MethodKind,
    lambda: f64,
    tau: f64,
    alpha: f64,
    eps: f64,
    beta: Value,
    interval: Interval,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_star: Option<f64>,
}

fn run_design(args: &DesignArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = params_for(args.method, args.lambda, args.tau, &args.gain)?;
    // echo what was asked for; derive the other one
    let alpha = args.gain.alpha.unwrap_or(params.alpha);
    let eps = match args.gain.alpha {
        Some(a) => eps_from_alpha(args.method, args.lambda, a, args.tau)?,
        None => params.eps,
    };
    let interval = stability_interval(args.method, args.lambda, args.tau)?;
    let beta = match convergence_rate(args.method, alpha, args.tau) {
        Ok(b) => json_number(b),
        Err(_) => Value::Null,
    };
    let tau_star = if alpha.abs() < 1.0 {
        tau_star(args.method, args.lambda, alpha)
            .ok()
            .map(|t| t.tau)
    } else {
        None
    };
    let doc = DesignJson {
        method: args.method,
        lambda: args.lambda,
        tau: args.tau,
        alpha,
        eps,
        beta,
        interval: Interval {
            lo: interval.eps_lo,
            hi: interval.eps_hi,
        },
        tau_star,
    };
    write_json(args.out.as_deref(), stdout, &doc)
}

fn simulate_from(
    method: MethodKind,
    tau: f64,
    gain: &GainArgs,
    plant: &PlantArgs,
    run: &RunArgs,
) -> Result<odfc_core::Trajectory, CliError> {
    let spec = plant.system()?;
    let params = params_for(method, spec.lambda(), tau, gain)?;
    let cfg = SimConfig::new(run.x0, run.periods).with_steps_per_tau(run.steps_per_tau);
    Ok(simulate(&spec, &params, &cfg)?)
}

fn run_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let traj = simulate_from(args.method, args.tau, &args.gain, &args.plant, &args.run)?;
    with_output(args.out.as_deref(), stdout, |w| {
        emit_trajectory(&traj, w, args.format)
    })
}

#[derive(Debug, Serialize)]
struct EnvelopeJson {
    mu: f64,
    c_m: Option<f64>,
    #[serde(rename = "c_M")]
    c_big_m: f64,
    rate_lower: Option<f64>,
    rate_upper: Value,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct RateJson {
    method: MethodKind,
    alpha: f64,
    beta_hat: f64,
    beta_analytic: Value,
    relative_error: Option<f64>,
    samples_used: usize,
    residual: f64,
    envelope: EnvelopeJson,
}

fn run_rate(args: &RateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let traj = simulate_from(args.method, args.tau, &args.gain, &args.plant, &args.run)?;
    let alpha = traj.alpha().expect("simulate attaches alpha");
    let fit = estimate_rate(&traj)?;
    let env = check_envelope(&traj, alpha, args.mu)?;
    if let Some(path) = &args.envelope_out {
        with_output(Some(path), stdout, |w| {
            writeln!(w, "t,abs_x,lower,upper")?;
            let x0 = traj.deviations()[0];
            for (&t, &d) in traj.times().iter().zip(traj.deviations()) {
                let lower = env.lower(x0, t).map(fmt_f64).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_f64(t),
                    fmt_f64(d.abs()),
                    lower,
                    fmt_f64(env.upper(x0, t))
                )?;
            }
            Ok(())
        })?;
    }
    let doc = RateJson {
        method: args.method,
        alpha,
        beta_hat: fit.beta_hat,
        beta_analytic: fit.beta_analytic.map_or(Value::Null, json_number),
        relative_error: fit.relative_error(),
        samples_used: fit.samples_used,
        residual: fit.residual,
        envelope: EnvelopeJson {
            mu: env.mu,
            c_m: env.c_m,
            c_big_m: env.c_big_m,
            rate_lower: env.rate_lower,
            rate_upper: json_number(env.rate_upper),
            holds: env.holds,
        },
    };
    write_json(args.out.as_deref(), stdout, &doc)
}

fn run_probe(args: &ProbeArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = args.plant.system()?;
    let params = params_for(args.method, spec.lambda(), args.tau, &args.gain)?;
    let probe = period_map_derivative(&spec, &params, args.h, args.steps_per_tau)?;
    write_json(args.out.as_deref(), stdout, &probe)
}

fn eps_range(method: Option<MethodKind>, grid: &GridArgs) -> (f64, f64) {
    let (lo, hi) = match method {
        Some(MethodKind::Velocity) => (-25.0, 0.0),
        Some(MethodKind::States) => (0.0, 25.0),
        None => (-50.0, 50.0),
    };
    (grid.eps_min.unwrap_or(lo), grid.eps_max.unwrap_or(hi))
}

#[derive(Debug, Serialize)]
struct Agreement {
    agree: usize,
    compared: usize,
    fraction: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RegionJson {
    method: MethodKind,
    lambda: f64,
    grid: [usize; 2],
    mode: RasterMode,
    cells: usize,
    analytic_stable: usize,
    empirical_stable: usize,
    agreement: Agreement,
}

fn run_region(args: &RegionArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let raster = stability_raster(
        args.method,
        args.lambda,
        eps_range(Some(args.method), &args.grid),
        (args.grid.lt_min, args.grid.lt_max),
        args.grid.grid,
        args.mode,
    )?;
    if let Some(path) = &args.out {
        with_output(Some(path), stdout, |w| emit_raster(&raster, w))?;
    }
    if let Some(path) = &args.boundary_out {
        with_output(Some(path), stdout, |w| emit_boundary(&raster, w))?;
    }
    let (agree, compared) = raster.agreement();
    let doc = RegionJson {
        method: args.method,
        lambda: args.lambda,
        grid: [args.grid.grid.0, args.grid.grid.1],
        mode: args.mode,
        cells: raster.cells.len(),
        analytic_stable: raster.analytic_stable_count(),
        empirical_stable: raster.empirical_stable_count(),
        agreement: Agreement {
            agree,
            compared,
            fraction: raster.agreement_fraction(),
        },
    };
    write_json(None, stdout, &doc)
}

#[derive(Debug, Serialize)]
struct TauStarJson {
    method: MethodKind,
    lambda: f64,
    alpha: f64,
    tau_star: f64,
    residual: f64,
    objective: f64,
    eps: f64,
}

fn run_taustar(args: &TauStarArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ts = tau_star(args.method, args.lambda, args.alpha)?;
    let doc = TauStarJson {
        method: args.method,
        lambda: args.lambda,
        alpha: args.alpha,
        tau_star: ts.tau,
        residual: ts.residual,
        objective: ts.objective,
        eps: eps_from_alpha(args.method, args.lambda, args.alpha, ts.tau)?,
    };
    write_json(args.out.as_deref(), stdout, &doc)
}

#[derive(Debug, Serialize)]
struct CounterexampleJson {
    lambda: f64,
    grid: [usize; 2],
    cells: usize,
    stable_cells: usize,
}

fn run_counterexample(args: &CounterexampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let raster = single_delay_counterexample(
        args.lambda,
        eps_range(None, &args.grid),
        (args.grid.lt_min, args.grid.lt_max),
        args.grid.grid,
    )?;
    if let Some(path) = &args.out {
        with_output(Some(path), stdout, |w| emit_raster(&raster, w))?;
    }
    let doc = CounterexampleJson {
        lambda: args.lambda,
        grid: [args.grid.grid.0, args.grid.grid.1],
        cells: raster.cells.len(),
        stable_cells: raster.empirical_stable_count(),
    };
    write_json(None, stdout, &doc)
}

/// Runs one parsed command, writing summaries to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Design(a) => run_design(a, stdout),
        Command::Simulate(a) => run_simulate(a, stdout),
        Command::Rate(a) => run_rate(a, stdout),
        Command::Probe(a) => run_probe(a, stdout),
        Command::Region(a) => run_region(a, stdout),
        Command::Taustar(a) => run_taustar(a, stdout),
        Command::Counterexample(a) => run_counterexample(a, stdout),
    }
}
