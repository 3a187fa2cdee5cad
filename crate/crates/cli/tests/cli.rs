use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn richards(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_richards"))
        .args(args)
        .current_dir(dir)
        .env_remove("RICHARDS_CONFIG")
        .env_remove("RICHARDS_OUT")
        .env_remove("RICHARDS_HORIZON")
        .env_remove("RICHARDS_SEED")
        .env_remove("RICHARDS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_defaults_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = richards(&["validate"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));
}

#[test]
fn validate_reports_named_violation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[model]\ngamma = 1.5\n");
    let o = richards(&["validate", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("gamma"), "{out}");
    assert!(!out.contains("all checks passed"));
}

#[test]
fn unknown_key_is_a_setup_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scheme]\ntua = 0.1\n");
    let o = richards(&["run", "--config", &cfg], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tua"));
}

#[test]
fn zero_horizon_run_writes_initial_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[grid]\ncells = [6]\n");
    let o = richards(&["run", "--config", &cfg, "--out", "res", "--horizon", "0"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let res = tmp.path().join("res");
    assert!(res.join("fields_000000.csv").exists());
    let diag = fs::read_to_string(res.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 2);
    let report = fs::read_to_string(res.join("report.toml")).unwrap();
    assert!(report.contains("status = \"ok\""));
}

#[test]
fn seeded_runs_are_bitwise_reproducible_and_env_overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[grid]\ncells = [10]\n[initial]\nnoise = 0.05\nsaturation = 0.6\n[output]\ncadence = 1\n",
    );
    for out in ["a", "b"] {
        let o = richards(&["run", "--config", &cfg, "--out", out, "--horizon", "0.03", "--seed", "11"], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_richards"))
        .args(["run", "--config", &cfg])
        .current_dir(tmp.path())
        .env("RICHARDS_OUT", "c")
        .env("RICHARDS_HORIZON", "0.03")
        .env("RICHARDS_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let read = |d: &str| fs::read(tmp.path().join(d).join("diagnostics.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(read("a"), read("c"));
    assert_eq!(String::from_utf8(read("a")).unwrap().lines().count(), 5);

    let o = richards(&["diagnose", "--config", &cfg, "--out", "a"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("a/diagnostics_recomputed.csv").exists());
}

#[test]
fn sweep_writes_per_point_outputs_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[run]\nhorizon = 0.04\n[grid]\ncells = [10]\n\
         [initial]\nkind = \"gaussian_bump\"\nsaturation = 0.6\n\
         [output]\ncadence = 0\n\
         [sweep]\ntau = [0.02, 0.01]\nreference_tau = 0.0025\n",
    );
    let o = richards(&["sweep", "--config", &cfg, "--out", "sw", "--threads", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(tmp.path().join("sw/sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].contains("observed_order"));
    let order: f64 = lines[1].split(',').nth(10).unwrap().parse().unwrap();
    assert!(order > 0.5 && order < 1.5, "order {order}");
    let points = fs::read_dir(tmp.path().join("sw"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("point_"))
        .count();
    assert_eq!(points, 2);
}
