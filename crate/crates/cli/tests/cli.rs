use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn probe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landscape-probe"))
        .args(args)
        .env_remove("LANDSCAPE_PROBE_SEED")
        .output()
        .expect("binary runs")
}

/// Runs with `--out` and returns (exit code, report, stderr).
fn report(args: &[&str]) -> (i32, Value, String) {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap().to_string();
    full.extend(["--out", &out_str]);
    let o = probe(&full);
    let stderr = String::from_utf8_lossy(&o.stderr).to_string();
    let value = fs::read_to_string(&out)
        .map(|t| serde_json::from_str(&t).unwrap())
        .unwrap_or(Value::Null);
    (o.status.code().unwrap(), value, stderr)
}

fn without_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time_secs");
    v
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn grad_check_default_passes() {
    let (code, rep, _) = report(&["grad-check", "--hessian"]);
    assert_eq!(code, 0);
    assert!(rep["payload"]["max_gradient_rel_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(rep["passed"], Value::Bool(true));
}

#[test]
fn grad_check_deep_sigmoid_passes() {
    let (code, rep, _) = report(&["grad-check", "--widths", "4,3,3", "--activation", "sigmoid", "--seed", "3"]);
    assert_eq!(code, 0, "{rep}");
}

#[test]
fn corrupted_gradient_is_caught() {
    let (code, rep, stderr) = report(&["grad-check", "--corrupt-gradient", "W1"]);
    assert_eq!(code, 1);
    assert_eq!(rep["passed"], Value::Bool(false));
    assert!(stderr.contains("FAIL gradient_rel_error"), "{stderr}");
}

#[test]
fn classify_generators() {
    let (code, rep, _) = report(&["classify", "--generator", "zero-misfit"]);
    assert_eq!(code, 0);
    assert_eq!(rep["payload"]["verdict"], "ZERO_MISFIT_GLOBAL_MIN");
    let (_, rep, _) = report(&["classify", "--generator", "relu-dead"]);
    assert_eq!(rep["payload"]["verdict"], "DEGENERATE_ACTIVATION_STATIONARY");
    let (code, _, _) = report(&["classify", "--generator", "zero-misfit", "--expect", "NOT_STATIONARY"]);
    assert_eq!(code, 1);
}

#[test]
fn classify_user_csv_with_random_weights() {
    let dir = TempDir::new().unwrap();
    let x = write(dir.path(), "x.csv", "# inputs\n0.5, -1.0, 2.0\n1.5, 0.3, -0.7\n");
    let y = write(dir.path(), "y.csv", "1.0, 0.0, -1.0\n");
    let (code, rep, _) = report(&["classify", "--x", &x, "--y", &y, "--r", "2", "--seed", "9"]);
    assert_eq!(code, 0);
    assert_eq!(rep["payload"]["verdict"], "NOT_STATIONARY");
}

#[test]
fn shape_mismatch_names_the_files() {
    let dir = TempDir::new().unwrap();
    let x = write(dir.path(), "inputs.csv", "0.5, -1.0\n1.5, 0.3\n");
    let y = write(dir.path(), "targets.csv", "1.0, 0.0, -1.0\n");
    let (code, _, stderr) = report(&["classify", "--x", &x, "--y", &y]);
    assert_eq!(code, 2);
    assert!(stderr.contains("inputs.csv") && stderr.contains("targets.csv"), "{stderr}");
}

#[test]
fn deep_layers_file() {
    let dir = TempDir::new().unwrap();
    let layers = r#"[
        {"weight": {"rows": 2, "cols": 2, "data": [0.5, -0.3, 0.2, 0.8]}, "activation": "tanh"},
        {"weight": {"rows": 1, "cols": 2, "data": [1.0, -1.0]}}
    ]"#;
    let l = write(dir.path(), "net.json", layers);
    let x = write(dir.path(), "x.json", r#"{"rows": 2, "cols": 3, "data": [1, 0, 0, 1, 1, 1]}"#);
    let y = write(dir.path(), "y.csv", "0.1, 0.2, 0.3\n");
    let (code, rep, stderr) = report(&["classify", "--layers", &l, "--x", &x, "--y", &y]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(rep["payload"]["blocks"], serde_json::json!(["W0", "W1"]));
}

#[test]
fn nullspace_examples() {
    let (code, rep, _) = report(&["nullspace", "--generator", "relu-dead-unit"]);
    assert_eq!(code, 0);
    let p = &rep["payload"];
    assert!(p["analytic_dimension"].as_u64().unwrap() > 0);
    assert!(p["max_containment_residual"].as_f64().unwrap() <= 1e-8 * p["lambda_max"].as_f64().unwrap());

    let (_, rep, _) = report(&["nullspace", "--generator", "overparam-identity", "--d", "6"]);
    assert!(rep["payload"]["numerical_dimension"].as_u64().unwrap() > 0);

    let (_, rep, _) = report(&["nullspace", "--generator", "well-posed"]);
    assert_eq!(rep["payload"]["numerical_dimension"], 0);
}

#[test]
fn nullspace_rejects_non_minimum() {
    let (code, _, stderr) = report(&["nullspace", "--generator", "random"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("NOT_STATIONARY"), "{stderr}");
}

#[test]
fn curvature_examples() {
    for (generator, class) in [
        ("square-saddle", "STRICT_SADDLE"),
        ("relu-dead", "ZERO_HESSIAN_SPURIOUS"),
        ("square-psd", "INCONCLUSIVE_PSD"),
    ] {
        let (code, rep, stderr) = report(&["curvature", "--generator", generator, "--expect", class]);
        assert_eq!(code, 0, "{generator}: {stderr}");
        assert_eq!(rep["payload"]["classification"], class);
    }
    let (_, rep, _) = report(&["curvature"]);
    assert!(rep["payload"]["quadratic_form_value"].as_f64().unwrap() < 0.0);
}

#[test]
fn curvature_precondition() {
    let (code, _, stderr) = report(&["curvature", "--generator", "zero-misfit"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("constraint"), "{stderr}");
}

#[test]
fn orthant_grid_and_reproducibility() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("o.json");
    let out = out.to_str().unwrap();
    let args = ["orthant", "--grid", "1:1,1:2,2:2", "--samples", "100000", "--seed", "5", "--out", out];
    let run = || {
        let o = probe(&args);
        assert_eq!(o.status.code(), Some(0));
        let v: Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
        serde_json::to_string(&without_time(v)).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn orthant_rd_six() {
    let (code, rep, _) = report(&["orthant", "--grid", "2:3", "--samples", "1000000"]);
    assert_eq!(code, 0);
    let est = &rep["payload"]["estimates"][0];
    assert_eq!(est["expected"], 0.015625);
    assert!(est["z"].as_f64().unwrap() <= 4.0);
}

#[test]
fn orthant_needs_enough_samples() {
    let (code, _, _) = report(&["orthant", "--samples", "10"]);
    assert_eq!(code, 2);
}

#[test]
fn linear_baseline_examples() {
    let (code, rep, _) = report(&["linear-baseline", "--generator", "factorable", "--d", "8"]);
    assert_eq!(code, 0);
    assert!(rep["payload"]["loss"].as_f64().unwrap() <= 1e-12);
    let (code, rep, _) = report(&["linear-baseline", "--seed", "4", "--d", "10"]);
    assert_eq!(code, 0);
    assert!(rep["payload"]["b_invariance_gap"].as_f64().unwrap() <= 1e-10);
    assert_eq!(rep["payload"]["perturbation_search"]["beaten"], 0);
}

#[test]
fn linear_baseline_rank_deficient_inputs() {
    let dir = TempDir::new().unwrap();
    let x = write(dir.path(), "x.csv", "1, 2, 3\n2, 4, 6\n");
    let y = write(dir.path(), "y.csv", "1, 0, 1\n");
    let (code, _, stderr) = report(&["linear-baseline", "--x", &x, "--y", &y, "--r", "1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("singular"), "{stderr}");
}

#[test]
fn config_file_with_flag_overrides_and_echo() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"seed": 11, "dims": {"m": 2, "n": 2, "r": 1, "d": 3}, "tolerances": {"grad": 1e-7}}"#,
    );
    let (code, rep, _) = report(&["classify", "--config", &cfg, "--m", "4", "--tol.curv", "1e-5"]);
    assert_eq!(code, 0);
    let c = &rep["config"];
    assert_eq!(c["command"], "classify");
    assert_eq!(c["seed"], 11);
    assert_eq!(c["dims"]["m"], 4);
    assert_eq!(c["dims"]["d"], 3);
    assert_eq!(c["tolerances"]["grad"], 1e-7);
    assert_eq!(c["tolerances"]["curv"], 1e-5);
    assert_eq!(c["tolerances"]["null"], 1e-8);
    assert_eq!(c["checks"]["gradient"], 1e-6);
}

#[test]
fn bad_config_field_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"sample_count": 3}"#);
    let (code, _, stderr) = report(&["orthant", "--config", &cfg]);
    assert_eq!(code, 2);
    assert!(stderr.contains("sample_count"), "{stderr}");
    let (code, _, stderr) = report(&["classify", "--tol.bogus", "1"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("bogus"), "{stderr}");
    let (code, _, stderr) = report(&["classify", "--m", "0"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("dims.m"), "{stderr}");
}

#[test]
fn seed_from_environment() {
    let run = |seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_landscape-probe"))
            .args(["classify"])
            .env("LANDSCAPE_PROBE_SEED", seed)
            .output()
            .unwrap();
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v
    };
    let a = run("42");
    assert_eq!(a["config"]["seed"], 42);
    assert_eq!(without_time(a), without_time(run("42")));
}

#[test]
fn large_matrices_are_summarized_in_reports() {
    // 9·8 + 8·9 = 144 parameters → 144×144 eigenvector basis
    let (code, rep, _) = report(&["nullspace", "--generator", "zero-misfit", "--m", "9", "--n", "9", "--r", "8", "--d", "3"]);
    assert_eq!(code, 0);
    let basis = &rep["payload"]["numerical_basis"];
    assert_eq!(basis["summarized"], true);
    assert!(basis.get("data").is_none());
}

#[test]
fn list_shows_registries() {
    let o = probe(&["list"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("square-saddle") && text.contains("softplus"));
}
