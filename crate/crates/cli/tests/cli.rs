use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};
use std::process::{Command, Output};

use coinflip_core::analysis::in_fair_region;
use coinflip_core::probability::{heads_probability, heads_probability_time_average};
use coinflip_core::InertiaTensor;
use serde_json::Value;

fn coinflip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coinflip"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = coinflip(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok_stdout(args)).unwrap()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = coinflip(args);
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect()
}

#[test]
fn simulate_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    ok_stdout(&["simulate", "--t-end", "1", "--dt", "1e-5", "--out", path.to_str().unwrap()]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 100_002);
    assert!(text.starts_with("t,"));
}

#[test]
fn bounds_fields() {
    let (phi0, theta0) = (FRAC_PI_4.to_string(), FRAC_PI_3.to_string());
    let v = json(&["bounds", "--phi0", &phi0, "--theta0", &theta0]);
    for key in ["c1", "c2", "theta_m", "theta_M", "case_tag", "fair"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["case_tag"], "both-acute");
    let (lo, hi) = (v["theta_m"].as_f64().unwrap(), v["theta_M"].as_f64().unwrap());
    assert!(lo <= FRAC_PI_3 && FRAC_PI_3 <= hi);
}

#[test]
fn prob_matches_library() {
    let inertia = InertiaTensor::half_dollar();
    let v = json(&["prob", "--phi0", "0.4", "--theta0", "0.9"]);
    let p = heads_probability(&inertia, 0.9, 0.4, 0.9).p;
    assert_eq!(v["p"].as_f64().unwrap(), p);
    assert_eq!(v["method_tag"], "quadrature");
    assert_eq!(v["parameters"]["law"], "arcsine");

    let v = json(&["prob", "--time-average", "--phi0", "0.4", "--theta0", "0.9"]);
    let p = heads_probability_time_average(&inertia, 0.9, 0.4, 0.9).p;
    assert_eq!(v["p"].as_f64().unwrap(), p);
    assert_eq!(v["parameters"]["law"], "time-average");
}

#[test]
fn degrees_flag_matches_radians() {
    let a = json(&["prob", "--degrees", "--phi0", "30", "--theta0", "50", "--beta", "40"]);
    let b = json(&[
        "prob",
        "--phi0",
        &30f64.to_radians().to_string(),
        "--theta0",
        &50f64.to_radians().to_string(),
        "--beta",
        &40f64.to_radians().to_string(),
    ]);
    assert!((a["p"].as_f64().unwrap() - b["p"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"initial": {"phi0": 0.2, "theta0": 0.7}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&["prob", "--config", c]);
    assert_eq!(v["parameters"]["theta0"].as_f64().unwrap(), 0.7);
    let v = json(&["prob", "--config", c, "--theta0", "0.8"]);
    assert_eq!(v["parameters"]["theta0"].as_f64().unwrap(), 0.8);
    assert_eq!(v["parameters"]["phi0"].as_f64().unwrap(), 0.2);
}

#[test]
fn invalid_input_exits_2() {
    assert_eq!(code(&["bounds", "--theta0", "4"]).0, 2);
    assert_eq!(code(&["bounds", "--ix", "-1"]).0, 2);
    assert_eq!(code(&["montecarlo", "--n", "10"]).0, 2);
    assert_eq!(code(&["prob", "--nope"]).0, 2);
    assert_eq!(code(&["prob-aggregate", "--theta0-file", "/nonexistent.csv"]).0, 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"initial\": {\n    \"theta0\": 1.0,\n  }\n}").unwrap();
    let (c, err) = code(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains("line 4"), "{err}");

    std::fs::write(&cfg, r#"{"initial": {"theta_0": 1.0}}"#).unwrap();
    let (c, err) = code(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains("theta_0"), "{err}");
}

#[test]
fn unmet_quadrature_target_exits_3() {
    let (c, err) = code(&["prob", "--quad-tol", "0"]);
    assert_eq!(c, 3, "{err}");
    assert!(err.contains("numerical"), "{err}");
}

#[test]
fn fair_region_grid() {
    let text = ok_stdout(&["fair-region"]);
    assert!(text.starts_with("phi0,theta0,fair\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 256 * 256);
    let inertia = InertiaTensor::half_dollar();
    for r in rows.iter().step_by(97) {
        assert_eq!(r[2] == 1.0, in_fair_region(&inertia, r[0], r[1]), "{r:?}");
    }
}

fn trapezoid(rows: &[Vec<f64>]) -> f64 {
    rows.windows(2)
        .map(|w| 0.5 * (w[1][0] - w[0][0]) * (w[0][1] + w[1][1]))
        .sum()
}

#[test]
fn pdf_theta_integrates_to_one() {
    for (phi0, theta0) in [(FRAC_PI_4, FRAC_PI_3), (0.3, 2.4)] {
        let (phi0, theta0) = (phi0.to_string(), theta0.to_string());
        let rows = csv_rows(&ok_stdout(&["pdf-theta", "--phi0", &phi0, "--theta0", &theta0]));
        assert_eq!(rows.len(), 4096);
        let mass = trapezoid(&rows);
        assert!((mass - 1.0).abs() < 1e-3, "mass {mass}");
    }
}

#[test]
fn pdf_theta_point_mass_is_one_row() {
    let text = ok_stdout(&["pdf-theta", "--ix", "7", "--iy", "7", "--iz", "13", "--theta0", "1.1"]);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",inf"), "{text}");
    let y: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert!((y - 1.1).abs() < 1e-12);
}

#[test]
fn montecarlo_is_reproducible() {
    let args = ["montecarlo", "--n", "5000", "--seed", "7"];
    let a = ok_stdout(&args);
    assert_eq!(a, ok_stdout(&args));
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["n"], 5000);
    let p = v["p_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let other = json(&["montecarlo", "--n", "5000", "--seed", "8"]);
    assert_ne!(other["p_hat"], v["p_hat"]);
}

#[test]
fn aggregate_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("theta0.csv");
    std::fs::write(&path, "theta0_radians,weight\n0.5,1\n1.0,2\n2.2,1\n").unwrap();
    let v = json(&["prob-aggregate", "--theta0-file", path.to_str().unwrap()]);
    let p = v["p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(v["parameters"]["theta0_samples"], 3);
    assert_eq!(v["parameters"]["phi0_grid"], 64);

    std::fs::write(&path, "theta0_radians\n0.5\n-1\n").unwrap();
    assert_eq!(code(&["prob-aggregate", "--theta0-file", path.to_str().unwrap()]).0, 2);
}
