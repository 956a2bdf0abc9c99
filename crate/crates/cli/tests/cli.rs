use std::f64::consts::PI;
use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn hres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hres"))
        .args(args)
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
        .env_remove("HRES_TOL")
        .output()
        .expect("hres runs")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON object")
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn rho_point_and_symmetry() {
    let r = json(&hres(&["rho", "--n", "1", "--mu", "0"]));
    assert!((f(&r["rho"]["value"]) - 0.25).abs() <= 1e-9);
    let a = json(&hres(&["rho", "--n", "1", "--mu", "0.9"]));
    let b = json(&hres(&["rho", "--n", "1", "--mu", "-0.9"]));
    assert_eq!(a["rho"]["value"], b["rho"]["value"]);
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = hres(&["rho", "--n", "1", "--mu", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2.5000000000000000e-1"), "{text}");
}

#[test]
fn rho_outside_the_strip_is_a_domain_error() {
    let out = hres(&["rho", "--n", "1", "--mu", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn rho_fixture_verification() {
    let r = json(&hres(&["rho", "--verify-fixtures"]));
    assert_eq!(r["fixtures"]["pass"], Value::Bool(true));
    assert!(r["rows"].as_array().unwrap().len() >= 10);
}

#[test]
fn constants_families() {
    let g = json(&hres(&["constants", "--family", "gamma", "--n", "1", "--k", "0"]));
    assert!((f(&g["gamma"]["value"]) - 0.5).abs() < 1e-12);
    let excluded = hres(&["constants", "--family", "alpha", "--n", "2", "--kappa", "0", "--p", "0", "--q", "0"]);
    assert_eq!(excluded.status.code(), Some(2));
    let b = json(&hres(&["constants", "--family", "beta", "--n", "2", "--check-symmetry"]));
    assert_eq!(b["symmetry"]["pass"], Value::Bool(true));
    assert_eq!(b["table"].as_array().unwrap().len(), 27);
}

#[test]
fn constants_csv_table() {
    let out = hres(&["constants", "--family", "gamma", "--n", "2", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,n,k,value,status"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn extension_suite_homogeneous_regime() {
    let r = json(&hres(&["extension-suite", "--d", "2", "--m", "-4.5", "--lambda-list", "0.5,2,4"]));
    assert_eq!(r["regime"], "homogeneous");
    assert!(f(&r["scaling_residual"]["value"]) <= 1e-6);
    assert!(f(&r["bump_independence"]["value"]) <= 1e-7);
}

#[test]
fn extension_suite_log_law() {
    let r = json(&hres(&["extension-suite", "--m", "-4", "--lambda-list", "0.5,1,2,4"]));
    assert_eq!(r["regime"], "log-homogeneous");
    assert!(f(&r["log_law_slope"]["relative_deviation"]) <= 1e-5);
    let at_one = r["defects"].as_array().unwrap().iter().find(|d| f(&d["lambda"]) == 1.0).unwrap();
    assert_eq!(f(&at_one["measured"]["re"]), 0.0);
}

#[test]
fn residue_of_the_koranyi_family() {
    let r = json(&hres(&["residue", "--symbol", "koranyi-power:-4", "--gauged"]));
    let s = f(&r["sphere_integral"]["value"]["re"]);
    assert!((s - 23.298989541667428).abs() < 1e-9);
    let res = f(&r["laurent"]["residue"]["re"]);
    assert!(res < 0.0 && (res.abs() - s).abs() <= 1e-4 * s);
    let density = f(&r["residue_density"]["value"]["re"]);
    assert!((density - s / (2.0 * PI).powi(3)).abs() < 1e-14);
}

#[test]
fn residue_without_a_critical_component_is_regular() {
    let r = json(&hres(&["residue", "--symbol", "koranyi-power:-3", "--gauged"]));
    assert!(f(&r["laurent"]["residue"]["re"]).abs() <= 1e-6);
    assert_eq!(f(&r["residue_density"]["value"]["re"]), 0.0);
}

#[test]
fn s3_checks() {
    let r = json(&hres(&["s3", "--check", "all"]));
    let pi2 = PI * PI;
    assert!((f(&r["volume"]["value"]) - pi2).abs() <= 1e-6 * pi2);
    assert!((f(&r["area"]["value"]) - pi2 / (8.0 * 2f64.sqrt())).abs() <= 1e-6);
    assert!((f(&r["gamma0"]["value"]) - 1.0 / 16.0).abs() <= 1e-6);
    assert!((f(&r["gamma1_prime"]["value"]) - 1.0 / 64.0).abs() <= 1e-6);
    assert!(r.get("failed_checks").is_none());
}

#[test]
fn weyl_from_file() {
    let nu0 = PI * PI / 32.0;
    let mut file = tempfile::NamedTempFile::new().unwrap();
    for k in 1..=5000 {
        writeln!(file, "{}", (k as f64 / nu0).sqrt()).unwrap();
    }
    let path = file.path().to_str().unwrap();
    let r = json(&hres(&["weyl", "--input", path, "--m", "2", "--d", "2"]));
    assert!((f(&r["nu0"]["value"]) - nu0).abs() <= 0.01 * nu0);
    assert!((f(&r["exponent"]["value"]) - 0.5).abs() <= 0.0025);

    let mut short = tempfile::NamedTempFile::new().unwrap();
    writeln!(short, "1\n2\n3").unwrap();
    let out = hres(&["weyl", "--input", short.path().to_str().unwrap(), "--m", "2", "--d", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn heat_from_model_and_csv() {
    let r = json(&hres(&["heat", "--model", "s3-sublaplacian", "--mellin"]));
    let a0 = f(&r["a"][0]["value"]);
    assert!((a0 - PI * PI / 16.0).abs() <= 1e-5);
    assert_eq!(r["mellin_residue"]["pass"], Value::Bool(true));
    assert!((f(&r["weyl_nu0"]) - PI * PI / 32.0).abs() <= 1e-6);

    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "t,trace").unwrap();
    for i in 0..=80 {
        let t = 1e-3 * 10f64.powf(i as f64 / 40.0);
        writeln!(file, "{t},{}", 2.0 / (t * t) + 0.5 / t + 3.0).unwrap();
    }
    let path = file.path().to_str().unwrap();
    let r = json(&hres(&["heat", "--input", path, "--m", "2", "--q", "4", "--depth", "2"]));
    let a: Vec<f64> = r["a"].as_array().unwrap().iter().map(|c| f(&c["value"])).collect();
    assert!((a[0] - 2.0).abs() < 1e-8 && (a[2] - 0.5).abs() < 1e-8 && (a[4] - 3.0).abs() < 1e-8, "{a:?}");

    let out = hres(&["heat", "--input", path]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_independent_of_threads() {
    let args = ["residue", "--symbol", "gauss-tapered:-4", "--gauged"];
    let one = hres(&[&["--threads", "1"][..], &args[..]].concat());
    let four = hres(&[&["--threads", "4"][..], &args[..]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn tolerance_override_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_hres"))
        .args(["residue", "--symbol", "koranyi-power:-3.5"])
        .env("HRES_TOL", "banana")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_hres"))
        .args(["residue", "--symbol", "koranyi-power:-3.5"])
        .env("HRES_TOL", "1e-8")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn unknown_symbols_are_rejected() {
    assert_eq!(hres(&["residue", "--symbol", "mystery:-4"]).status.code(), Some(2));
}
