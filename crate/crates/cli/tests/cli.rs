//! End-to-end runs of the `resdyn` binary.

use std::f64::consts::PI;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_resdyn")).args(args).output().expect("spawn resdyn");
    let stdout = String::from_utf8_lossy(&out.stdout).to_string();
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap_or(-1), json, String::from_utf8_lossy(&out.stderr).to_string())
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn curvature_flat_and_de_sitter() {
    let (code, j, _) = run(&["curvature", "--metric", "minkowski4", "--point", "0.1,0.2,0,0"]);
    assert_eq!(code, 0);
    assert_eq!(j["schema_version"], "1");
    assert!(j["report"]["points"][0]["scalar"].as_f64().unwrap().abs() < 1e-12);

    let (code, j, _) = run(&["curvature", "--metric", "desitter4"]);
    assert_eq!(code, 0);
    let r = j["report"]["points"][0]["scalar"].as_f64().unwrap();
    assert!((r + 12.0).abs() < 1e-9, "R = {r}");
}

#[test]
fn malformed_metric_is_a_usage_error() {
    let dir = std::env::temp_dir().join(format!("resdyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    std::fs::write(&path, "dim = 2\nsignature = \"+-\"\ng00 = \"1 + \"\ng11 = \"-1\"\n").unwrap();
    let (code, _, err) = run(&["curvature", "--metric", path.to_str().unwrap()]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("error"));
}

#[test]
fn unknown_metric_and_bad_flags() {
    assert_eq!(run(&["curvature", "--metric", "no-such-metric"]).0, 1);
    assert_eq!(run(&["curvature", "--metric", "minkowski4", "--point", "0,0"]).0, 1);
    assert_eq!(run(&["curvature", "--metric", "minkowski4", "--mode", "euclidean"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn hadamard_order_cap() {
    let (code, _, err) = run(&["hadamard", "--metric", "minkowski4", "--order", "5"]);
    assert_eq!(code, 1);
    assert!(err.contains("N ≤ 3"), "{err}");
}

#[test]
fn hadamard_flat_diagonal() {
    let (code, j, _) = run(&["hadamard", "--metric", "minkowski4", "--order", "2"]);
    assert_eq!(code, 0);
    let diag = j["report"]["points"][0]["diagonal"].as_array().unwrap();
    let vals: Vec<f64> = diag.iter().map(|d| d["value"].as_f64().unwrap()).collect();
    assert_eq!(vals.len(), 3);
    assert!((vals[0] - 1.0).abs() < 1e-12);
    assert!(vals[1].abs() < 1e-9 && vals[2].abs() < 1e-9, "{vals:?}");
}

#[test]
fn residue_out_of_range_alpha_is_zero_with_note() {
    let (code, j, _) = run(&["residue", "--metric", "minkowski4", "--alpha", "3", "--z", "0+1i"]);
    assert_eq!(code, 0);
    let r = &j["report"]["reports"][0];
    let (re, im) = complex(&r["analytic"]);
    assert_eq!((re, im), (0.0, 0.0));
    assert!(r["note"].as_str().unwrap().contains("out of residue range"));
    assert!(r["zeta"].is_null());
}

#[test]
fn residue_flat_alpha_two() {
    let (code, j, _) = run(&["residue", "--metric", "minkowski4", "--alpha", "2", "--z", "i", "--verify"]);
    assert_eq!(code, 0);
    let r = &j["report"]["reports"][0];
    let (re, im) = complex(&r["analytic"]);
    let want = 1.0 / (8.0 * PI * PI);
    assert!(re.abs() < 1e-15 && (im - want).abs() < 1e-15, "{re} {im}");
    let (nre, nim) = complex(&r["numeric"]);
    assert!(nre.abs() < 1e-9 && ((nim - want) / want).abs() < 1e-6);
    let (zre, zim) = complex(&r["zeta"]);
    assert!(zre.abs() < 1e-15 && (zim - want / 2.0).abs() < 1e-15);
}

#[test]
fn residue_de_sitter_curvature_identity() {
    let (code, j, err) = run(&["residue", "--metric", "desitter4", "--alpha", "1", "--z", "i0", "--order", "1", "--verify"]);
    assert_eq!(code, 0, "{err}");
    let r = &j["report"]["reports"][0];
    let deltas = r["deltas"].as_array().unwrap();
    let id = deltas.iter().find(|d| d["name"] == "curvature_identity").expect("identity delta");
    assert!(id["pass"].as_bool().unwrap(), "{id}");
}

#[test]
fn verify_suites() {
    assert_eq!(run(&["verify", "no-such-suite"]).0, 1);
    let (code, j, _) = run(&["verify", "stokes"]);
    assert_eq!(code, 0);
    assert_eq!(j["report"]["pass"], true);
    assert_eq!(run(&["verify", "normalform"]).0, 0);
    assert_eq!(run(&["verify", "homogeneity", "--seed", "11"]).0, 0);
}

#[test]
fn config_file_overrides_flags() {
    let dir = std::env::temp_dir().join(format!("resdyn-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let out = dir.join("out.json");
    std::fs::write(
        &cfg,
        format!("metric = \"minkowski2\"\nalpha = [1]\nz = [\"0+2i\"]\nout = \"{}\"\n", out.display()),
    )
    .unwrap();
    let (code, _, err) = run(&["residue", "--config", cfg.to_str().unwrap(), "--metric", "minkowski4"]);
    assert_eq!(code, 0, "{err}");
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(j["report"]["metric"], "minkowski2");
    // n = 2, α = 1: i u_0 / (2π)
    let (re, im) = complex(&j["report"]["reports"][0]["analytic"]);
    assert!(re.abs() < 1e-15 && (im - 1.0 / (2.0 * PI)).abs() < 1e-15);

    std::fs::write(&cfg, "metric = \"minkowski2\"\nbogus = 1\n").unwrap();
    assert_eq!(run(&["residue", "--config", cfg.to_str().unwrap()]).0, 1);
}
