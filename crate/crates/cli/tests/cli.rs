use std::process::{Command, Output};

use serde_json::Value;

fn jellium(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jellium"))
        .args(args)
        .env("JELLIUM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn triangular_derivative_at_zero() {
    let out = jellium(&["epstein", "--lattice", "triangular", "--s", "0", "--deriv"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["command"], "epstein");
    let v = doc["result"]["value"].as_f64().unwrap();
    assert!((v + 0.660_558_714_214_019).abs() < 1e-12, "{v}");
    assert_eq!(doc["config"]["lattice"], "triangular");
}

#[test]
fn direct_and_ewald_backends_agree() {
    let a = json(&jellium(&["epstein", "--lattice", "square", "--s", "1"]));
    let b = json(&jellium(&["epstein", "--lattice", "square", "--s", "1", "--backend", "direct"]));
    let (a, b) = (a["result"]["value"].as_f64().unwrap(), b["result"]["value"].as_f64().unwrap());
    assert!((a - b).abs() < 1e-7, "{a} {b}");
}

#[test]
fn bounds_table() {
    let out = jellium(&["bounds"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["ordered"], true);
    let entries = doc["result"]["table"]["entries"].as_array().unwrap();
    let w = entries.iter().find(|e| e["name"] == "min_W_upper").unwrap();
    assert!((w["value"].as_f64().unwrap() + 4.1504).abs() < 1e-4);
}

#[test]
fn sphere_tetrahedron() {
    let out = jellium(&["sphere-min", "--n", "4", "--restarts", "2"]);
    assert!(out.status.success());
    let e = json(&out)["result"]["energy"].as_f64().unwrap();
    // regular tetrahedron: six pairs at squared distance 8/3
    assert!((e + 6.0 * (8.0f64 / 3.0).ln()).abs() < 1e-9, "{e}");
}

#[test]
fn usage_errors_exit_two_with_json() {
    for args in [
        &["epstein", "--bogus", "1"][..],
        &["epstein", "--lattice", "pentagonal"],
        &["epstein", "--s", "abc"],
        &["epstein", "--s", "3", "--backend", "direct"],
        &["lattice-energy", "--lattice", "square", "--s", "2"],
        &[],
    ] {
        let out = jellium(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let doc = json(&out);
        assert_eq!(doc["error"]["exit_code"], 2, "{args:?}");
        assert!(doc["error"]["message"].as_str().unwrap().len() > 3);
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "command = epstein\nlatice = square\n").unwrap();
    let out = jellium(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"]["message"].as_str().unwrap().contains("latice"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# square lattice at s = 3\ncommand = epstein\nlattice = square\ns = 3\n").unwrap();
    let from_file = json(&jellium(&["--config", cfg.to_str().unwrap()]));
    assert_eq!(from_file["config"]["s"], 3.0);
    let overridden = json(&jellium(&["epstein", "--config", cfg.to_str().unwrap(), "--s", "4"]));
    assert_eq!(overridden["config"]["s"], 4.0);
    assert_eq!(overridden["config"]["lattice"], "square");
    let out = jellium(&["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_file_and_trace_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("torus.json");
    let out = jellium(&[
        "torus-min",
        "--n",
        "4",
        "--torus",
        "square",
        "--restarts",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let e = doc["result"]["energy"].as_f64().unwrap();
    let perfect = doc["result"]["perfect_lattice_energy"].as_f64().unwrap();
    assert!(e <= perfect + 1e-8, "{e} {perfect}");
    let trace = std::fs::read_to_string(dir.path().join("torus.trace.csv")).unwrap();
    assert!(trace.starts_with("iter,"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn runs_are_deterministic() {
    let args = ["torus-min", "--n", "6", "--restarts", "3", "--seed", "11", "--max-iters", "300"];
    let a = jellium(&args);
    let b = jellium(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn jellium_finite_patch() {
    let dir = tempfile::tempdir().unwrap();
    let terms = dir.path().join("terms.csv");
    let out = jellium(&["jellium-finite", "--rings", "2", "--a", "0.3", "--terms", terms.to_str().unwrap()]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["result"]["n"], 19);
    let per = doc["result"]["energy_per_point"].as_f64().unwrap();
    assert!(per > doc["result"]["lower_bound_per_point"].as_f64().unwrap());
    assert!(doc["result"]["decomposition"]["residual"].as_f64().unwrap().abs() < 1e-6);
    assert!(std::fs::read_to_string(terms).unwrap().contains("point_point"));
}

#[test]
fn quick_validation_passes() {
    let out = jellium(&["validate", "--quick", "--only", "1,2,3,4,5,6,7,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["result"]["passed"], true);
    assert_eq!(doc["result"]["criteria"].as_array().unwrap().len(), 8);
}

#[test]
fn tampered_reference_fails_and_names_the_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("refs.json");
    std::fs::write(&refs, r#"{ "steinerberger_w": -4.0 }"#).unwrap();
    let out = jellium(&["validate", "--only", "8", "--references", refs.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&out);
    assert_eq!(doc["result"]["passed"], false);
    let failed = doc["result"]["failed"].as_array().unwrap();
    assert_eq!(failed.len(), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}
