use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynlab_cli::{all_verdicts_pass, parse_config, FAILED_MARKER};
use serde_json::Value;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn dynlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynlab"))
        .args(args)
        .env("DYNLAB_THREADS", "1")
        .output()
        .unwrap()
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    dynlab(&args)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const MINIMAL_SHBF: &str = r#"{
  "problem": { "name": "quadratic", "spectrum": [1.0, 0.5], "minimizer": [0.5, -1.0] },
  "system": { "variant": "shbf", "lambda": 1.0, "b": { "family": "power", "c": 1.0, "r": 2.0 } },
  "start": 4.0,
  "horizon": 50.0,
  "initial": { "position": [0.5, -1.0], "velocity": [0.0, 0.0] },
  "integrator": { "step": 1e-3, "record_every": 100 }
}"#;

#[test]
fn shipped_configs_parse() {
    let mut n = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let parsed = parse_config(&fs::read_to_string(&path).unwrap());
        assert!(parsed.is_ok(), "{}: {:?}", path.display(), parsed.err());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn validate_minimal_shbf_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run("validate", &configs_dir().join("shbf_validate.json"), dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("validate.json"));
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["assumption"]["sup_ratio"], 0.5);
    assert_eq!(report["assumption"]["default_eta"], 0.75);
    assert_eq!(report["problem"]["structure"], "convexity");
    assert!(all_verdicts_pass(&report));
}

#[test]
fn validate_reports_failing_gate_with_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    for (alpha, code) in [(3.0, 1), (3.5, 0)] {
        let text = format!(
            r#"{{"problem": {{"name": "quadratic", "spectrum": [1.0]}}, "system": {{"variant": "savd", "alpha": {alpha}}},
               "start": 1.0, "horizon": 10.0, "integrator": {{"step": 1e-3}}}}"#
        );
        let config = write_config(dir.path(), "savd.json", &text);
        let out_dir = dir.path().join(format!("a{alpha}"));
        let out = run("validate", &config, &out_dir, &[]);
        assert_eq!(out.status.code(), Some(code));
        let report = read_json(&out_dir.join("validate.json"));
        assert_eq!(all_verdicts_pass(&report), code == 0);
        assert_eq!(report["assumption"]["checked_on"], "constant_friction_image");
    }
}

#[test]
fn simulate_at_rest_gives_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "rest.json", MINIMAL_SHBF);
    let out = run("simulate", &config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next(),
        Some("t,suboptimality,residual,residual_squared,gap,velocity,distance")
    );
    let mut rows = 0;
    for line in lines {
        assert!(line.split(',').skip(1).all(|x| x == "0"), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 501);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("t,y_1,y_2,c_1,c_2"));
    assert_eq!(traj.lines().nth(1), Some("4,0.5,-1,0,0"));
    assert!(!dir.path().join(FAILED_MARKER).exists());
}

#[test]
fn schema_errors_name_paths() {
    let cases = [
        (
            MINIMAL_SHBF.replace("\"step\": 1e-3", "\"step\": -1e-3"),
            ".integrator.step",
        ),
        (
            MINIMAL_SHBF.replace("\"record_every\"", "\"record_evry\""),
            ".integrator.record_evry",
        ),
        (MINIMAL_SHBF.replace("\"horizon\": 50.0,", ""), ""),
        (
            MINIMAL_SHBF.replace("\"lambda\": 1.0", "\"lambda\": 0.0"),
            ".system.lambda",
        ),
        (
            MINIMAL_SHBF.replace("[0.5, -1.0], \"velocity\"", "[0.5], \"velocity\""),
            ".initial.position",
        ),
        (
            MINIMAL_SHBF.replace("\"spectrum\": [1.0, 0.5]", "\"spectrum\": [1.0, -0.5]"),
            ".problem.spectrum[1]",
        ),
        (
            MINIMAL_SHBF.replace(
                "\"variant\": \"shbf\"",
                "\"variant\": \"sfogda_alt\", \"alpha\": 3, \"beta\": 1, \"x\": 0",
            ),
            ".system",
        ),
    ];
    for (text, path) in cases {
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.path == path), "expected {path:?} in {err}");
    }
    let missing = parse_config(&MINIMAL_SHBF.replace("\"horizon\": 50.0,", "")).unwrap_err();
    assert!(missing.0[0].message.contains("missing field `horizon`"));
    let unknown = parse_config(&MINIMAL_SHBF.replace("\"start\": 4.0,", "\"start\": 4.0, \"colour\": 1,")).unwrap_err();
    assert!(unknown.0[0].message.contains("unknown field `colour`"));
    let mismatched =
        parse_config(&MINIMAL_SHBF.replace("\"name\": \"quadratic\"", "\"name\": \"quadratic_gradient\"")).unwrap_err();
    assert_eq!(mismatched.0[0].path, ".system.variant");

    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        &MINIMAL_SHBF.replace("\"step\": 1e-3", "\"step\": -1e-3"),
    );
    let out = run("simulate", &config, &dir.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(".integrator.step"));
}

#[test]
fn weak_damping_is_valid_with_warning() {
    let text = r#"{
      "problem": { "name": "rotation" },
      "system": { "variant": "sfogda_alt", "alpha": 2.0, "beta": 1.0 },
      "start": 1.0, "horizon": 10.0, "integrator": { "step": 1e-3 }
    }"#;
    let parsed = parse_config(text).unwrap();
    assert_eq!(parsed.warnings.len(), 1, "{:?}", parsed.warnings);
    assert!(parsed.warnings[0].contains("alpha"));
    let parsed = parse_config(&text.replace("2.0", "4.0")).unwrap();
    assert!(parsed.warnings.is_empty());
}

#[test]
fn savd_ensemble_meets_rate_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("savd_ensemble.json");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let out = run("ensemble", &config, &a, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&a.join("ratefit.json"));
    assert_eq!(summary["n_paths"], 100);
    let slope = summary["fits"][0]["slope"].as_f64().unwrap();
    assert!(slope <= -1.7, "slope {slope}");
    assert_eq!(summary["fits"][0]["pass"], Value::Bool(true));

    assert_eq!(run("ensemble", &config, &b, &[]).status.code(), Some(0));
    for name in ["ensemble.csv", "ratefit.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    run("ensemble", &config, &c, &["--seed-offset", "7"]);
    assert_ne!(
        fs::read(a.join("ensemble.csv")).unwrap(),
        fs::read(c.join("ensemble.csv")).unwrap()
    );
    assert_eq!(read_json(&c.join("ratefit.json"))["seeds"][0], 5007);
}

#[test]
fn rates_fit_existing_metric_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "problem": { "name": "quadratic", "spectrum": [1.0, 4.0] },
      "system": { "variant": "savd", "alpha": 4.0 },
      "start": 1.0, "horizon": 99.0,
      "initial": { "position": [1.0, -1.0] },
      "diffusion": { "multiplier": { "family": "power", "c": 1.0, "r": -1.6 } },
      "integrator": { "step": 1e-3, "record_every": 10 },
      "seed": 5000,
      "fits": [{ "metric": "velocity", "target": -1.0, "tolerance": 0.3 }]
    }"#;
    let config = write_config(dir.path(), "savd.json", text);
    let out_dir = dir.path().join("out");
    assert_eq!(run("rates", &config, &out_dir, &[]).status.code(), Some(3));
    assert!(out_dir.join(FAILED_MARKER).exists());

    assert_eq!(run("simulate", &config, &out_dir, &[]).status.code(), Some(0));
    let out = run("rates", &config, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.join(FAILED_MARKER).exists());
    let report = read_json(&out_dir.join("rates.json"));
    let fit = &report["fits"][0];
    assert_eq!(fit["source"], "metrics.csv");
    assert_eq!(fit["window"], serde_json::json!([10.0, 100.0]));
    assert!(fit["slope"].as_f64().unwrap() <= -0.7);
    assert!(all_verdicts_pass(&report));
}

#[test]
fn equivalence_study_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("savd_equivalence.json");
    let out = run("equivalence", &config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("equivalence.json"));
    assert_eq!(report["kind"], "opt");
    assert_eq!(report["steps"].as_array().unwrap().len(), 5);
    assert!(report["slope"].as_f64().unwrap() >= 0.4);
    let csv = fs::read_to_string(dir.path().join("equivalence.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("s,t,pos_err,vel_err"));

    let again = dir.path().join("again");
    run("equivalence", &config, &again, &[]);
    for name in ["equivalence.json", "equivalence.csv"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(again.join(name)).unwrap()
        );
    }
}

#[test]
fn divergence_leaves_failed_marker() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{
      "problem": { "name": "quadratic", "spectrum": [1.0] },
      "system": { "variant": "shbf", "lambda": 1.0, "b": { "family": "exponential", "c": 1.0, "a": 1.0 } },
      "start": 0.0, "horizon": 100.0,
      "integrator": { "step": 0.5 }
    }"#;
    let config = write_config(dir.path(), "stiff.json", text);
    let parsed = parse_config(text).unwrap();
    assert!(parsed.warnings.iter().any(|w| w.contains("stability hint")));
    let out = run("simulate", &config, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    let marker = fs::read_to_string(dir.path().join(FAILED_MARKER)).unwrap();
    assert!(marker.contains("diverge"), "{marker}");
}

#[test]
fn verdict_scan_covers_nested_objects() {
    let ok = serde_json::json!({ "fits": [{ "pass": true }, { "pass": true }], "pass": true });
    let bad = serde_json::json!({ "fits": [{ "pass": true }, { "pass": false }], "pass": true });
    assert!(all_verdicts_pass(&ok));
    assert!(!all_verdicts_pass(&bad));
}
