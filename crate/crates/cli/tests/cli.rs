use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epiflow_core::energy::convexity_constant;
use epiflow_core::io::CheckpointRecord;
use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_epiflow");

fn epiflow(root: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("EPIFLOW_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn canonical(out: &str) -> Value {
    json!({
        "n": 128,
        "a": 1.0,
        "initial": {"family": "cosine", "rho": 0.3, "k": 1},
        "stepper": {"tau0": 1e-4, "tau_max": 1e-2, "growth": 1.2, "t_final": 2.0},
        "checkpoint_times": [0.0, 0.5, 1.0, 2.0],
        "output_dir": out,
        "certificates": ["Evi", "SlopeDecay", "ExpDecay", "Positivity"]
    })
}

fn flat(out: &str) -> Value {
    json!({
        "n": 32,
        "a": 1.0,
        "initial": {"family": "zero"},
        "stepper": {"t_final": 0.1},
        "checkpoint_times": [0.0, 0.1],
        "output_dir": out
    })
}

fn report(root: &Path, out: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(root.join(out).join("report.json")).unwrap()).unwrap()
}

fn certificate<'a>(report: &'a Value, kind: &str) -> &'a Value {
    report["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["kind"] == kind)
        .unwrap_or_else(|| panic!("no {kind} certificate"))
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at_unix\""))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn flat_profile_gives_constant_rows_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flat.json", &flat("flat"));
    let o = epiflow(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("flat/trajectory.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(rows.len() > 2);
    for r in &rows {
        assert_eq!(r[1], rows[0][1], "energy column changed");
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
    let rep = report(dir.path(), "flat");
    assert_eq!(rep["status"], "pass");
    assert_eq!(rep["certificates"].as_array().unwrap().len(), 5);
    assert_eq!(fs::read_dir(dir.path().join("flat/checkpoints")).unwrap().count(), 2);
}

#[test]
fn canonical_run_decays_at_the_convexity_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "canon.json", &canonical("canon"));
    let o = epiflow(dir.path(), &["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep = report(dir.path(), "canon");
    let rate = certificate(&rep, "ExpDecay")["scalars"]["fitted_rate"].as_f64().unwrap();
    assert!(rate <= -4.0 * convexity_constant(), "fitted rate {rate}");
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = canonical("same");
    cfg["stepper"]["t_final"] = json!(0.2);
    cfg["certificates"] = json!(["Evi", "SlopeDecay", "ExpDecay", "Positivity", "DiffQuotient"]);
    let path = write_config(dir.path(), "c.json", &cfg);
    let roots = [dir.path().join("one"), dir.path().join("two")];
    for r in &roots {
        let o = epiflow(r, &["run", path.to_str().unwrap()]);
        assert!(matches!(code(&o), 0 | 1));
    }
    let read = |r: &Path, f: &str| fs::read(r.join("same").join(f)).unwrap();
    assert_eq!(read(&roots[0], "trajectory.csv"), read(&roots[1], "trajectory.csv"));
    assert_eq!(read(&roots[0], "trajectory.json"), read(&roots[1], "trajectory.json"));
    let rep = |r: &Path| without_timestamp(&String::from_utf8(read(r, "report.json")).unwrap());
    assert_eq!(rep(&roots[0]), rep(&roots[1]));
}

#[test]
fn inadmissible_initial_profile_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = canonical("bad");
    cfg["initial"]["rho"] = json!(1.5);
    let path = write_config(dir.path(), "bad.json", &cfg);
    let o = epiflow(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("initial profile violates v > 0"));
    assert!(!dir.path().join("bad").exists());
}

#[test]
fn malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut unknown = flat("x");
    unknown["tau"] = json!(1e-3);
    let mut bad_grid = flat("x");
    bad_grid["n"] = json!(7);
    let mut bad_step = flat("x");
    bad_step["stepper"]["tau0"] = json!(-1.0);
    for (i, cfg) in [unknown, bad_grid, bad_step].iter().enumerate() {
        let path = write_config(dir.path(), &format!("m{i}.json"), cfg);
        assert_eq!(code(&epiflow(dir.path(), &["run", path.to_str().unwrap()])), 2, "config {i}");
    }
    fs::write(dir.path().join("garbage.json"), "{ not json").unwrap();
    let garbage = dir.path().join("garbage.json");
    assert_eq!(code(&epiflow(dir.path(), &["run", garbage.to_str().unwrap()])), 2);
}

#[test]
fn missing_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let m = missing.to_str().unwrap();
    for cmd in ["run", "check", "energy", "sweep"] {
        assert_eq!(code(&epiflow(dir.path(), &[cmd, m])), 2, "{cmd}");
    }
}

#[test]
fn newton_failure_aborts_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = canonical("abort");
    cfg["stepper"]["newton_max_iters"] = json!(1);
    cfg["stepper"]["max_halvings"] = json!(0);
    let path = write_config(dir.path(), "abort.json", &cfg);
    let o = epiflow(dir.path(), &["run", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let rep = report(dir.path(), "abort");
    assert_eq!(rep["status"], "aborted");
    assert!(rep["aborted"].as_str().unwrap().contains("Newton"));
    assert!(dir.path().join("abort/trajectory.csv").exists());
}

#[test]
fn check_passes_and_catches_a_corrupted_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = flat("check");
    cfg["n"] = json!(64);
    let good = write_config(dir.path(), "good.json", &cfg);
    let o = epiflow(dir.path(), &["check", good.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    cfg["kernel_override"] = json!({"k": 1, "value": -0.45});
    let bad = write_config(dir.path(), "bad.json", &cfg);
    let o = epiflow(dir.path(), &["check", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let rep: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("check/check.json")).unwrap()).unwrap();
    assert_eq!(certificate(&rep, "Identity")["pass"], false);
}

fn energy_json(dir: &Path, rec: &CheckpointRecord) -> (i32, Value) {
    let path = dir.join("cp.json");
    fs::write(&path, serde_json::to_string(rec).unwrap()).unwrap();
    let o = epiflow(dir, &["energy", path.to_str().unwrap()]);
    let v = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
    (code(&o), v)
}

#[test]
fn energy_of_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let zero = CheckpointRecord { n: 16, a: 1.0, t: 0.0, re: vec![0.0; 9], im: vec![0.0; 9] };
    let (c, v) = energy_json(dir.path(), &zero);
    assert_eq!(c, 0);
    assert!((v["total"].as_f64().unwrap() + 0.193147).abs() < 1e-6);

    // u = 0.2 cos 2πx, so v = 1 - 7.9 cos 2πx dips below zero
    let mut steep = zero.clone();
    steep.re[1] = 0.1;
    let (c, v) = energy_json(dir.path(), &steep);
    assert_eq!(c, 0);
    assert_eq!(v["total"], "infinity");
}

#[test]
fn sweep_runs_each_config_in_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfgs = dir.path().join("configs");
    fs::create_dir(&cfgs).unwrap();
    write_config(&cfgs, "a.json", &flat("a"));
    let mut b = flat("b");
    b["initial"] = json!({"family": "random", "seed": 3, "modes": 4, "amplitude": 0.4});
    b["certificates"] = json!(["Evi", "SlopeDecay", "ExpDecay", "Positivity"]);
    write_config(&cfgs, "b.json", &b);
    let o = epiflow(dir.path(), &["sweep", cfgs.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for out in ["a", "b"] {
        assert_eq!(report(dir.path(), out)["status"], "pass");
    }

    write_config(&cfgs, "c.json", &flat("a"));
    let o = epiflow(dir.path(), &["sweep", cfgs.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}
