use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ring-cqed"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Every listed output exists and matches its recorded digest.
fn check_manifest(dir: &Path) -> Value {
    let m = read_json(&dir.join("manifest.json"));
    for entry in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(dir.join(entry["path"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), entry["sha256"].as_str().unwrap());
    }
    m
}

fn analytic(dir: &Path, seed: &str) -> Vec<u8> {
    let cfg = config("four_emitters.json");
    run(&[
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
        "analytic",
        "--config",
        cfg.to_str().unwrap(),
        "--diffusion-mhz",
        "20",
        "--mc-samples",
        "200",
        "--points",
        "30",
    ]);
    check_manifest(dir);
    std::fs::read(dir.join("analytic.csv")).unwrap()
}

#[test]
fn seeded_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = analytic(&tmp.path().join("a"), "7");
    let b = analytic(&tmp.path().join("b"), "7");
    let c = analytic(&tmp.path().join("c"), "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let m = read_json(&tmp.path().join("a/manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["command"], "analytic");
}

#[test]
fn recipe_output_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for sub in ["x", "y"] {
        let dir = tmp.path().join(sub);
        run(&["--out", dir.to_str().unwrap(), "reproduce", "g2cmp"]);
        let m = check_manifest(&dir);
        hashes.push((m["config_hash"].clone(), m["outputs"].clone()));
        let s = read_json(&dir.join("summary.json"));
        let d2 = s["comparisons"].as_array().unwrap().iter().find(|c| c["d"] == 2).unwrap();
        assert_eq!(d2["monotone"], true);
    }
    assert_eq!(hashes[0], hashes[1]);
}

#[test]
fn invalid_parameters_are_reported_by_path() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&config("four_emitters.json"));
    cfg["emitters"][2]["gamma"] = (-1.0).into();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, cfg.to_string()).unwrap();
    let out = bin().args(["validate", "--config", bad.to_str().unwrap()]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("emitters[2].gamma"));

    let out = bin().args(["--out", tmp.path().to_str().unwrap(), "reproduce", "fig9"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown recipe"));
}

#[test]
fn shipped_configs_validate() {
    for name in ["four_emitters.json", "single_backscatter.json", "kerr_single_emitter.json"] {
        let out = run(&["validate", "--config", config(name).to_str().unwrap()]);
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("OK"), "{name}");
    }
}

#[test]
fn hom_bound_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    run(&["--out", tmp.path().to_str().unwrap(), "fit", "hom", "--visibility", "0.76", "--gamma-mhz", "122"]);
    check_manifest(tmp.path());
    let fit = read_json(&tmp.path().join("fit.json"));
    let g = fit["gamma_deph_max_mhz"].as_f64().unwrap();
    assert!((g - 38.5).abs() < 0.05);
}

#[test]
fn correlate_writes_symmetric_auto_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("single_backscatter.json");
    run(&[
        "--out",
        tmp.path().to_str().unwrap(),
        "correlate",
        "--config",
        cfg.to_str().unwrap(),
        "--pairs",
        "aa,ab",
        "--points",
        "40",
    ]);
    check_manifest(tmp.path());
    let text = std::fs::read_to_string(tmp.path().join("g2.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| h.contains("aa")).unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let n = rows.len();
    for i in 0..n {
        assert!((rows[i][0] + rows[n - 1 - i][0]).abs() < 1e-18);
        assert!((rows[i][col] - rows[n - 1 - i][col]).abs() < 1e-9);
    }
}
