use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ilnlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilnlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("ILNLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_lemma2_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["verify", "--suite", "lemma2", "--trials", "200", "--seed", "11"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("PASS"));
    assert!(out.contains("suite lemma2: pass"));
}

#[test]
fn minimax_lower_bound_value() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["bounds", "--kind", "theorem2_lower", "--rho", "0.4"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value"], 0.025);
    assert_eq!(v["kind"], "theorem2_lower");
}

#[test]
fn missing_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["sweep", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.toml"));
}

#[test]
fn unknown_flag_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["bounds", "--kind", "lemma2", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_bound_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["bounds", "--kind", "theorem1", "--rho", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bounds_fill_inputs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_logistic.toml");
    let o = ilnlab(&["bounds", "--kind", "prop_linear", "--config", &cfg, "--rho", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.48957).abs() < 1e-4);
}

#[test]
fn generate_train_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("construction.toml");
    let o = ilnlab(&["generate", "--config", &cfg, "--n", "500", "--rho", "0.4", "--seed", "3", "--out", "d.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("d.csv").exists());
    let lines = std::fs::read_to_string(dir.path().join("d.csv")).unwrap().lines().count();
    assert_eq!(lines, 501);

    let o = ilnlab(&["train", "--config", &cfg, "--data", "d.csv", "--channel", "noisy", "--out", "h.json"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = ilnlab(
        &["evaluate", "--config", &cfg, "--hypothesis", "h.json", "--data", "d.csv", "--rho", "0.4", "--out", "e.json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let clean = v["risk_clean"].as_f64().unwrap();
    // Bayes risk is 0.75 * (1 - 0.625); a wrong call at b adds 0.1875
    assert!((clean - 0.28125).abs() < 1e-12 || (clean - 0.46875).abs() < 1e-12, "{clean}");
    assert_eq!(v["risk_noisy"].as_f64().unwrap(), 0.375 + 0.0);
    assert!(dir.path().join("e.json").exists());
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("linear_logistic.toml");
    for out in ["a.csv", "b.csv"] {
        let o = ilnlab(&["generate", "--config", &cfg, "--n", "50", "--rho", "0.3", "--seed", "7", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("construction.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_ilnlab"))
        .args(["sweep", "--config", &cfg, "--out", "s.csv", "--json", "s.json"])
        .current_dir(dir.path())
        .env("ILNLAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 3 * 5);
    assert!(text.starts_with("run_id,seed,n,rho,"));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 45);
}

#[test]
fn bad_worker_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("construction.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_ilnlab"))
        .args(["sweep", "--config", &cfg, "--out", "s.csv"])
        .current_dir(dir.path())
        .env("ILNLAB_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn minimax_report_and_floor_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(
        &["minimax", "--rho", "0.2,0.4", "--n-max", "2", "--estimators", "5", "--out", "m.json", "--csv", "floor.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("m.json")).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[1]["closed_form_excess_sum"], 0.1875);
    let floor = std::fs::read_to_string(dir.path().join("floor.csv")).unwrap();
    assert_eq!(floor.lines().next().unwrap(), "rho,excess_sum,lemma6_lower,theorem2_lower");
    assert_eq!(floor.lines().count(), 3);
}

#[test]
fn minimax_rejects_rho_outside_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let o = ilnlab(&["minimax", "--rho", "1.2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
