use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paulichan"))
}

fn write(dir: &Path, name: &str, value: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn simulate_then_estimate_pauli() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sim.json",
        &json!({"channel": {"dim": 2, "lambda": [0.3, -0.1, 0.1]}, "strategy": "optimal", "shots": 20000}),
    );
    let rec = dir.path().join("rec.json");
    let out = run(&["simulate", "--spec", spec.to_str().unwrap(), "--seed", "4", "--out", rec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&rec);
    assert_eq!(doc["configs"].as_array().unwrap().len(), 3);
    assert_eq!(doc["counts"][0].as_array().unwrap().len(), 2);

    let est = dir.path().join("est.json");
    let out = run(&["estimate", "--spec", rec.to_str().unwrap(), "--model", "pauli", "--out", est.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est = read_json(&est);
    let lambda = floats(&est["lambda"]);
    for (a, b) in lambda.iter().zip([0.3, -0.1, 0.1]) {
        // 5σ at 20000 shots per configuration.
        assert!((a - b).abs() < 5.0 * (1.0f64 / 20000.0).sqrt(), "{lambda:?}");
    }
    assert_eq!(est["choi"].as_array().unwrap().len(), 4);
    assert!(est["residual"].as_f64().unwrap() >= 0.0);
    assert!(est["iterations"].as_u64().is_some());
}

#[test]
fn seeds_control_the_record() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sim.json", &json!({"channel": {"dim": 2, "lambda": [0.5, 0.2, 0.1]}, "strategy": "optimal"}));
    let s = spec.to_str().unwrap();
    let a = run(&["simulate", "--spec", s, "--seed", "11"]).stdout;
    let b = run(&["simulate", "--spec", s, "--seed", "11"]).stdout;
    let c = run(&["simulate", "--spec", s, "--seed", "12"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn choi_model_from_informationally_complete_data() {
    let dir = tempfile::tempdir().unwrap();
    let s = 1.0 / 3f64.sqrt();
    let inputs = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut configs = Vec::new();
    for b in inputs {
        for m in axes {
            configs.push(json!({
                "input_bloch": b,
                "povm_blochs": [[1.0, m[0], m[1], m[2]], [1.0, -m[0], -m[1], -m[2]]],
                "shots": 50000
            }));
        }
    }
    let spec = write(
        dir.path(),
        "sim.json",
        &json!({"channel": {"dim": 2, "lambda": [0.6, -0.1, -0.2]}, "configs": configs}),
    );
    let rec = dir.path().join("rec.json");
    assert!(run(&["simulate", "--spec", spec.to_str().unwrap(), "--seed", "2", "--out", rec.to_str().unwrap()])
        .status
        .success());
    let out = run(&["estimate", "--spec", rec.to_str().unwrap(), "--model", "choi"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda = floats(&est["lambda"]);
    for (a, b) in lambda.iter().zip([0.6, -0.1, -0.2]) {
        assert!((a - b).abs() < 0.03, "{lambda:?}");
    }
}

#[test]
fn gen_pauli_model_on_qutrit_data() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "sim.json",
        &json!({"channel": {"dim": 3, "lambda": [-0.3, -0.2, -0.1, 0.1]}, "strategy": "qutrit-optimal", "shots": 20000}),
    );
    let rec = dir.path().join("rec.json");
    assert!(run(&["simulate", "--spec", spec.to_str().unwrap(), "--out", rec.to_str().unwrap()]).status.success());
    let doc = read_json(&rec);
    assert!(doc["configs"][0]["input_matrix"].is_array());
    let out = run(&["estimate", "--spec", rec.to_str().unwrap(), "--model", "gen-pauli"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda = floats(&est["lambda"]);
    for (a, b) in lambda.iter().zip([-0.3, -0.2, -0.1, 0.1]) {
        assert!((a - b).abs() < 0.03, "{lambda:?}");
    }
    // The qubit-only model refuses qutrit data.
    assert_eq!(run(&["estimate", "--spec", rec.to_str().unwrap(), "--model", "pauli"]).status.code(), Some(2));
}

#[test]
fn design_qubit_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "design.json", &json!({"channel": {"dim": 2, "lambda": [0.3, -0.1, 0.5]}, "shots": 1500}));
    let out = run(&["design", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let expected: f64 = [0.3f64, -0.1, 0.5].iter().map(|l| 1.0 / (1.0 - l * l)).sum();
    assert!((doc["objective"].as_f64().unwrap() - expected).abs() < 1e-10);
    // Largest |λ| first: the z configuration.
    let first = floats(&doc["configs"][0]["input_bloch"]);
    assert!((first[2] - 1.0).abs() < 1e-12);
    assert_eq!(doc["configs"][0]["shots"], 1500);
    assert_eq!(doc["fisher_matrix"].as_array().unwrap().len(), 3);
}

#[test]
fn design_qutrit_returns_one_config_per_basis() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "design.json", &json!({"channel": {"dim": 3, "lambda": [-0.3, -0.2, -0.1, 0.1]}}));
    let out = run(&["design", "--spec", spec.to_str().unwrap(), "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["configs"].as_array().unwrap().len(), 4);
    let f = &doc["fisher_matrix"];
    let trace: f64 = (0..4).map(|i| f[i][i].as_f64().unwrap()).sum();
    assert!((trace - doc["objective"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn directions_in_exact_mode() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "dir.json",
        &json!({
            "channel": {"dim": 2, "lambda": [0.6, 0.3, 0.1]},
            "settings": {"mode": {"mode": "exact", "tol": 1e-10}, "cascade": 1, "tau_scale": 2.0, "max_steps": 50, "max_restarts": 5}
        }),
    );
    let out = run(&["directions", "--spec", spec.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    for (i, d) in doc["directions"].as_array().unwrap().iter().enumerate() {
        let v = floats(d);
        assert!((v[i].abs() - 1.0).abs() < 1e-9, "{v:?}");
    }
    assert_eq!(doc["iterates"].as_array().unwrap().len(), 2);
}

#[test]
fn casestudy_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "cs.json",
        &json!({"channel": {"lambda": [0.3, -0.1, 0.1]}, "strategy": "optimal", "shot_grid": [100, 1000], "trials": 3}),
    );
    let csv = dir.path().join("cs.csv");
    let out = run(&["casestudy", "--spec", spec.to_str().unwrap(), "--seed", "9", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "n_shots,trial_count,lambda_mean_1,lambda_mean_2,lambda_mean_3,lambda_var_1,lambda_var_2,lambda_var_3,hs_error"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("100,3,"));
    let sidecar = read_json(&dir.path().join("cs.json"));
    assert_eq!(sidecar["seed"], 9);
    assert_eq!(sidecar["spec"]["seed"], 9);
    assert_eq!(sidecar["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn robustness_writes_one_row_per_angle() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "rb.json",
        &json!({"lambda": [0.3, -0.1, 0.1], "alphas": [0.0, 0.1, 2.0943951023931953], "shots": 1500, "trials": 4}),
    );
    let out = run(&["robustness", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("0,4,"));
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["estimate"]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.json", &json!({"channel": {"dim": 2, "lambda": [0.9, 0.9, -0.9]}, "strategy": "optimal"}));
    let out = run(&["simulate", "--spec", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid channel"));
    let garbled = dir.path().join("garbled.json");
    fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(run(&["simulate", "--spec", garbled.to_str().unwrap()]).status.code(), Some(2));
    let neither = write(dir.path(), "neither.json", &json!({"channel": {"dim": 2, "lambda": [0.3, 0.1, 0.1]}}));
    assert_eq!(run(&["simulate", "--spec", neither.to_str().unwrap()]).status.code(), Some(2));
    let cs = write(
        dir.path(),
        "cs.json",
        &json!({"channel": {"lambda": [0.3, -0.1, 0.1]}, "strategy": "qutrit-optimal", "shot_grid": [100]}),
    );
    assert_eq!(run(&["casestudy", "--spec", cs.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn non_convergence_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "sim.json", &json!({"channel": {"dim": 2, "lambda": [0.3, -0.1, 0.1]}, "strategy": "optimal"}));
    let rec = dir.path().join("rec.json");
    assert!(run(&["simulate", "--spec", spec.to_str().unwrap(), "--out", rec.to_str().unwrap()]).status.success());
    let out = run(&["estimate", "--spec", rec.to_str().unwrap(), "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(3));

    let dirs = write(
        dir.path(),
        "dir.json",
        &json!({
            "channel": {"dim": 2, "lambda": [0.6, 0.3, 0.1]},
            "settings": {"mode": {"mode": "exact", "tol": 1e-12}, "max_steps": 2, "max_restarts": 0}
        }),
    );
    assert_eq!(run(&["directions", "--spec", dirs.to_str().unwrap()]).status.code(), Some(3));

    let cs = write(
        dir.path(),
        "cs.json",
        &json!({"channel": {"lambda": [0.3, -0.1, 0.1]}, "strategy": "optimal", "shot_grid": [100], "trials": 2, "solver": {"max_iters": 1}}),
    );
    let csv = dir.path().join("cs.csv");
    let out = run(&["casestudy", "--spec", cs.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(csv.exists());
}
