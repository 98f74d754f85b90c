//! End-to-end runs of the `subcir` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;
use tempfile::TempDir;

use subcir::cir::CirParams;

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_fig.json")
}

fn reference_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(reference_config()).unwrap()).unwrap()
}

fn subcir(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_subcir"));
    cmd.args(args).env_remove("SUBCIR_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, cfg: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

/// Diagnostics lines from standard error.
fn diagnostics(out: &Output) -> Vec<Value> {
    String::from_utf8(out.stderr.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).expect("each diagnostic is one JSON object"))
        .collect()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn spectrum_first_row_is_asymptotic_spread() {
    let out = subcir(&["spectrum", "--config", reference_config().to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("beta,n,lambda,phi_lambda,norm"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&first[..2], &[1.0, 1.0]);
    assert!((first[3] - 0.084).abs() < 5e-4, "{}", first[3]);
    assert_eq!(diagnostics(&out)[0]["level"], "info");
}

#[test]
fn csv_headers_follow_the_column_contract() {
    let cfg = reference_config();
    let cfg = cfg.to_str().unwrap();
    for (cmd, header) in [
        ("levy", "x,y,pi0_phi"),
        ("intensity", "x,k_phi"),
        ("survival", "T,Q"),
        ("spreads", "T,S"),
        ("price", "T,price"),
        ("simulate", "path_id,t,T_t,X_phi,D_phi,k_phi_of_X"),
    ] {
        let out = subcir(&[cmd, "--config", cfg], &[]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        assert_eq!(stdout(&out).lines().next(), Some(header), "{cmd}");
    }
}

#[test]
fn spreads_end_with_limit_record() {
    let out = subcir(&["spreads", "--config", reference_config().to_str().unwrap()], &[]);
    let text = stdout(&out);
    let last = text.lines().last().unwrap();
    let (t, s) = last.split_once(',').unwrap();
    assert_eq!(t, "inf");
    assert!((s.parse::<f64>().unwrap() - 0.084).abs() < 5e-4);
}

#[test]
fn json_format() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("q.json");
    let out = subcir(
        &["survival", "--config", reference_config().to_str().unwrap(), "--format", "json", "--out", out_path.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(out_path).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 120);
    let q = rows[0]["Q"].as_f64().unwrap();
    assert!(q > 0.9 && q < 1.0);
}

#[test]
fn trivial_subordinator_survival_matches_affine_closed_form() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["model"]["subordinator"] = serde_json::json!({"gamma": 1.0});
    cfg["survival"] = serde_json::json!({"x": 0.05, "horizons": [0.5, 1, 2, 5, 10]});
    let path = write_config(&dir, "trivial.json", &cfg);
    let out = subcir(&["survival", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(0));
    let p = CirParams::new(1.0, 0.1, 0.25).unwrap();
    for line in stdout(&out).lines().skip(1) {
        let (t, q) = line.split_once(',').unwrap();
        let (t, q): (f64, f64) = (t.parse().unwrap(), q.parse().unwrap());
        let want = p.charfun_affine(t, 1.0, Complex64::new(0.0, 0.0), 0.05).re;
        assert!((q - want).abs() < 1e-10, "T={t}: {q} vs {want}");
    }
}

#[test]
fn alpha_above_one_rejected_with_pointer() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["model"]["subordinator"]["alpha"] = 1.5.into();
    let path = write_config(&dir, "alpha.json", &cfg);
    let out = subcir(&["survival", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(2));
    let d = diagnostics(&out);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0]["pointer"], "/model/subordinator/alpha");
    assert!(out.stdout.is_empty());
}

#[test]
fn negative_path_count_rejected() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["mc"]["n_paths"] = (-10).into();
    let path = write_config(&dir, "paths.json", &cfg);
    let out = subcir(&["simulate", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostics(&out)[0]["pointer"], "/mc/n_paths");
}

#[test]
fn malformed_empty_and_missing_configs() {
    let dir = TempDir::new().unwrap();
    for (name, text, pointer) in [("empty.json", "", ""), ("broken.json", "{\"model\": ", ""), ("bare.json", "{}", "/model")] {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        let out = subcir(&["spectrum", "--config", path.to_str().unwrap()], &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert_eq!(diagnostics(&out)[0]["pointer"], pointer, "{name}");
    }
    let out = subcir(&["spectrum", "--config", dir.path().join("absent.json").to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = subcir(&["spectrum"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_keys_rejected() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["mc"]["paths"] = 10.into();
    cfg["extra"] = Value::Null;
    let path = write_config(&dir, "unknown.json", &cfg);
    let out = subcir(&["spectrum", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(2));
    let mut pointers: Vec<String> = diagnostics(&out).iter().map(|d| d["pointer"].as_str().unwrap().to_string()).collect();
    pointers.sort();
    assert_eq!(pointers, ["/extra", "/mc/paths"]);
}

#[test]
fn model_rejection_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["model"]["subordinator"] = serde_json::json!({"C": 0.5, "alpha": 0.0, "eta": 1.0});
    let path = write_config(&dir, "gamma.json", &cfg);
    let out = subcir(&["intensity", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostics(&out)[0]["pointer"], "/model/subordinator");
}

#[test]
fn quadrature_budget_exhaustion_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["numerics"]["budget"] = 10.into();
    let path = write_config(&dir, "budget.json", &cfg);
    let out = subcir(&["intensity", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(diagnostics(&out)[0]["level"], "error");
}

#[test]
fn simulate_is_reproducible_and_thread_independent() {
    let dir = TempDir::new().unwrap();
    let mut cfg = reference_json();
    cfg["mc"]["n_paths"] = 64.into();
    cfg["mc"]["business_times"] = serde_json::json!({"start": 0, "stop": 5, "points": 51});
    let path = write_config(&dir, "sim.json", &cfg);
    let run = |threads: &str, seed: Option<&str>| {
        let envs: Vec<(&str, &str)> = seed.map(|s| ("SUBCIR_SEED", s)).into_iter().collect();
        let out = subcir(&["simulate", "--config", &path, "--threads", threads], &envs);
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let a = run("1", None);
    assert_eq!(a, run("1", None));
    assert_eq!(a, run("3", None));
    assert_eq!(a.split(|&b| b == b'\n').count(), 64 * 51 + 2);
    let b = run("1", Some("7"));
    assert_ne!(a, b);
    assert_eq!(b, run("2", Some("7")));
    cfg["mc"]["seed"] = 7.into();
    let path7 = write_config(&dir, "sim7.json", &cfg);
    let out = subcir(&["simulate", "--config", &path7], &[]);
    assert_eq!(out.stdout, b);
}

#[test]
fn bad_seed_override_is_a_config_error() {
    let out = subcir(&["spectrum", "--config", reference_config().to_str().unwrap()], &[("SUBCIR_SEED", "abc")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostics(&out)[0]["pointer"], "/mc/seed");
}

fn small_validate(dir: &TempDir, expected: f64) -> String {
    let mut cfg = reference_json();
    cfg["validate"]["n_paths"] = 4000.into();
    cfg["validate"]["sampler_draws"] = 20000.into();
    cfg["validate"]["expected_asymptotic_spread"] = expected.into();
    write_config(dir, &format!("validate_{expected}.json"), &cfg)
}

#[test]
fn validate_report_is_sorted_json() {
    let dir = TempDir::new().unwrap();
    let path = small_validate(&dir, 0.084);
    let out = subcir(&["validate", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["status"], "pass");
    assert_eq!(report["passed"], 10);
    let names: Vec<&String> = report["checks"].as_object().unwrap().keys().collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    // keys appear in sorted order in the text itself
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("checks") < pos("failed") && pos("failed") < pos("passed") && pos("passed") < pos("skipped"));
    assert_eq!(text, stdout(&subcir(&["validate", "--config", &path], &[])));
}

#[test]
fn validate_failure_exits_1() {
    let dir = TempDir::new().unwrap();
    let path = small_validate(&dir, 0.5);
    let out = subcir(&["validate", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "fail");
    assert_eq!(report["checks"]["asymptotic_spread"]["status"], "fail");
}
