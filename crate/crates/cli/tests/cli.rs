//! End-to-end runs of the `odfc` binary.

use std::process::{Command, Output};

use odfc_cli::output::{parse_numeric_csv, parse_trajectory_csv, BOUNDARY_HEADER, RASTER_HEADER};
use odfc_core::{
    alpha_from_eps, eps_from_alpha, make_system, simulate, ControlParams, MethodKind, Plant,
    SimConfig,
};
use serde_json::Value;

fn odfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odfc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = odfc(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok_stdout(args)).unwrap()
}

const SIM_VELOCITY: &[&str] = &[
    "simulate",
    "--method",
    "velocity",
    "--plant",
    "linear",
    "--lambda",
    "2",
    "--tau",
    "0.2",
    "--alpha",
    "-0.4",
    "--x0",
    "0.5",
    "--periods",
    "10",
];

#[test]
fn simulate_hits_period_map() {
    let rows = parse_trajectory_csv(&ok_stdout(SIM_VELOCITY)).unwrap();
    let at = rows
        .iter()
        .find(|r| (r.t - 0.4).abs() < 1e-12)
        .expect("row at t = 0.4");
    assert!((at.x + 0.2).abs() < 1e-5, "{}", at.x);
    let first = rows[0];
    assert_eq!(
        (first.t, first.x, first.u, first.segment_active),
        (0.0, 0.5, 0.0, false)
    );
    // 10 periods of 2τ at 256 steps per τ, plus the initial node.
    assert_eq!(rows.len(), 10 * 2 * 256 + 1);
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let text = ok_stdout(SIM_VELOCITY);
    let rows = parse_trajectory_csv(&text).unwrap();
    let spec = make_system(Plant::Linear { slope: 2.0 }, 0.0).unwrap();
    let p = ControlParams::from_alpha(MethodKind::Velocity, 2.0, -0.4, 0.2).unwrap();
    let traj = simulate(&spec, &p, &SimConfig::new(0.5, 10)).unwrap();
    assert_eq!(rows.len(), traj.len());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.t.to_bits(), traj.times()[i].to_bits());
        assert_eq!(r.x.to_bits(), traj.states()[i].to_bits());
        assert_eq!(r.u.to_bits(), traj.control()[i].to_bits());
        assert_eq!(r.segment_active, traj.is_active(i));
    }
}

#[test]
fn deadbeat_rows_vanish_after_one_period() {
    for (method, m) in [("velocity", 2.0), ("states", 3.0)] {
        let text = ok_stdout(&[
            "simulate",
            "--method",
            method,
            "--tau",
            "0.2",
            "--alpha",
            "0",
            "--periods",
            "3",
        ]);
        for r in parse_trajectory_csv(&text).unwrap() {
            if r.t >= m * 0.2 - 1e-12 {
                assert!(r.x.abs() < 1e-6, "{method} t={} x={}", r.t, r.x);
            }
            if !r.segment_active {
                assert_eq!(r.u, 0.0);
            }
        }
    }
}

#[test]
fn json_trajectory_mirrors_csv() {
    let mut args = SIM_VELOCITY.to_vec();
    args.extend(["--format", "json"]);
    let doc = json(&args);
    let rows = parse_trajectory_csv(&ok_stdout(SIM_VELOCITY)).unwrap();
    let xs = doc["x"].as_array().unwrap();
    assert_eq!(xs.len(), rows.len());
    assert_eq!(xs[0].as_f64(), Some(0.5));
    let meta = &doc["metadata"];
    assert_eq!(meta["method"], "velocity");
    assert_eq!(meta["steps_per_tau"], 256);
    assert_eq!(meta["x0"].as_f64(), Some(0.5));
}

#[test]
fn design_states_deadbeat() {
    let doc = json(&[
        "design", "--method", "states", "--lambda", "2", "--tau", "0.2", "--alpha", "0",
    ]);
    assert!((doc["eps"].as_f64().unwrap() - 22.6253).abs() < 1e-4);
    assert!((doc["interval"]["lo"].as_f64().unwrap() - 15.8108).abs() < 1e-4);
    assert!((doc["interval"]["hi"].as_f64().unwrap() - 29.4400).abs() < 1e-4);
    assert_eq!(doc["beta"], "-inf");
    let keys: Vec<&str> = doc
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    for k in [
        "method", "lambda", "tau", "alpha", "eps", "beta", "interval",
    ] {
        assert!(keys.contains(&k), "{k} missing");
    }
}

#[test]
fn echoed_gain_round_trips() {
    for method in ["velocity", "states"] {
        let m: MethodKind = method.parse().unwrap();
        let from_alpha = json(&[
            "design", "--method", method, "--lambda", "2", "--tau", "0.2", "--alpha", "-0.4",
        ]);
        let eps = from_alpha["eps"].as_f64().unwrap();
        assert!((alpha_from_eps(m, 2.0, eps, 0.2).unwrap() + 0.4).abs() < 1e-12);
        let from_eps = json(&[
            "design",
            "--method",
            method,
            "--lambda",
            "2",
            "--tau",
            "0.2",
            "--eps",
            &eps.to_string(),
        ]);
        let alpha = from_eps["alpha"].as_f64().unwrap();
        assert!(
            (eps_from_alpha(m, 2.0, alpha, 0.2).unwrap() - eps).abs() < 1e-12 * eps.abs().max(1.0)
        );
    }
}

#[test]
fn region_summary_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let raster = dir.path().join("raster.csv");
    let boundary = dir.path().join("boundary.csv");
    let doc = json(&[
        "region",
        "--method",
        "velocity",
        "--lambda",
        "2",
        "--grid",
        "64x64",
        "--mode",
        "both",
        "--out",
        raster.to_str().unwrap(),
        "--boundary-out",
        boundary.to_str().unwrap(),
    ]);
    assert!(doc["agreement"]["fraction"].as_f64().unwrap() >= 0.95);
    let cells =
        parse_numeric_csv(&std::fs::read_to_string(&raster).unwrap(), RASTER_HEADER).unwrap();
    assert_eq!(cells.len(), 64 * 64);
    let curve = parse_numeric_csv(
        &std::fs::read_to_string(&boundary).unwrap(),
        BOUNDARY_HEADER,
    )
    .unwrap();
    assert_eq!(curve.len(), 64);
    for row in curve {
        let s = row[0].unwrap();
        assert!((row[1].unwrap() + 2.0 * s.cosh() / s).abs() < 1e-10 * (2.0 * s.cosh() / s));
    }
}

#[test]
fn outputs_are_byte_identical() {
    let a = odfc(SIM_VELOCITY).stdout;
    let b = odfc(SIM_VELOCITY).stdout;
    assert_eq!(a, b);
    let region = ["region", "--method", "states", "--grid", "16x16"];
    assert_eq!(odfc(&region).stdout, odfc(&region).stdout);
}

#[test]
fn small_tools_report_json() {
    let ts = json(&[
        "taustar", "--method", "velocity", "--lambda", "2", "--alpha", "0",
    ]);
    assert!((ts["tau_star"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    let ce = json(&["counterexample", "--grid", "16x16"]);
    assert_eq!(ce["stable_cells"], 0);
    let pr = json(&[
        "probe",
        "--method",
        "states",
        "--plant",
        "cubic_minus",
        "--tau",
        "0.2",
        "--eps",
        "25.3512",
    ]);
    assert!((pr["numeric_dp"].as_f64().unwrap() + 0.4).abs() < 1e-4);
    let rate = json(&[
        "rate", "--method", "velocity", "--tau", "0.2", "--alpha", "-0.4",
    ]);
    assert!(rate["beta_hat"].as_f64().is_some());
}

fn error_record(args: &[&str]) -> (i32, Value) {
    let out = odfc(args);
    let code = out.status.code().unwrap();
    let record = serde_json::from_slice(&out.stderr).unwrap_or(Value::Null);
    (code, record)
}

#[test]
fn failures_have_distinct_exit_codes() {
    let (code, rec) = error_record(&[
        "simulate",
        "--method",
        "velocity",
        "--tau",
        "0.2",
        "--eps",
        "5",
        "--periods",
        "40",
    ]);
    assert_eq!(code, 3);
    assert_eq!(rec["error"], "diverged");
    assert_eq!(rec["exit_code"], 3);

    let (code, rec) = error_record(&[
        "design", "--method", "velocity", "--lambda", "-1", "--tau", "0.2", "--alpha", "0",
    ]);
    assert_eq!(code, 2);
    assert!(rec["message"].is_string());

    let (code, rec) = error_record(&["simulate", "--method", "velocity", "--tau", "0.2"]);
    assert_eq!(code, 2);
    assert_eq!(rec["error"], "usage");

    let (code, rec) = error_record(&[
        "rate", "--method", "velocity", "--tau", "0.2", "--alpha", "0",
    ]);
    assert_eq!(code, 4);
    assert_eq!(rec["error"], "deadbeat_detected");

    let (code, rec) = error_record(&[
        "simulate",
        "--method",
        "velocity",
        "--tau",
        "0.2",
        "--alpha",
        "0",
        "--out",
        "/nonexistent/dir/x.csv",
    ]);
    assert_eq!(code, 5);
    assert_eq!(rec["error"], "io");
}
