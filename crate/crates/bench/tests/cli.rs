use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lowdeg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowdeg")).args(args).output().expect("running lowdeg")
}

fn ok(args: &[&str]) -> Output {
    let out = lowdeg(args);
    assert!(out.status.success(), "lowdeg {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    r.records().map(|x| x.unwrap()).collect()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let i = r.headers().unwrap().iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    r.records().map(|x| x.unwrap()[i].to_string()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn frames_build_writes_table_and_check() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("frames");
    ok(&["--out", out.to_str().unwrap(), "frames", "build", "--kind", "min"]);
    assert!(out.join("frame_min_1.json").exists());
    let err: f64 = column(&out.join("frame_check.csv"), "identity_error")[0].parse().unwrap();
    assert!(err < 1e-10);
    let m = manifest(&out);
    assert_eq!(m["schema_version"], 1);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o["path"] == "frame_min_1.json"));
}

#[test]
fn bitflip_bounds_hold() {
    let tmp = TempDir::new().unwrap();
    ok(&["--out", tmp.path().to_str().unwrap(), "channel", "bounds"]);
    let holds = column(&tmp.path().join("bitflip_bounds.csv"), "holds");
    assert_eq!(holds.len(), 20);
    assert!(holds.iter().all(|h| h == "true"));
}

#[test]
fn sampled_snapshots_estimate_near_truth() {
    let tmp = TempDir::new().unwrap();
    let (s_dir, e_dir) = (tmp.path().join("s"), tmp.path().join("e"));
    ok(&["--seed", "7", "--out", s_dir.to_str().unwrap(), "sample", "--n", "2", "--shots", "40000"]);
    let snaps = s_dir.join("snapshots.csv");
    assert_eq!(rows(&snaps).len(), 40000);
    ok(&[
        "--out",
        e_dir.to_str().unwrap(),
        "estimate",
        "--snapshots",
        snaps.to_str().unwrap(),
        "--entries",
        "00,zz",
        "--truth",
    ]);
    let est = e_dir.join("estimates.csv");
    let got: Vec<f64> = column(&est, "estimate_re").iter().map(|v| v.parse().unwrap()).collect();
    let truth: Vec<f64> = column(&est, "truth_re").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(got.len(), 2);
    for (g, t) in got.iter().zip(&truth) {
        assert!((g - t).abs() < 0.1, "estimate {g}, truth {t}");
    }
}

#[test]
fn reproduce_fig2_from_config_file() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("fig2.toml");
    fs::write(&cfg, "[bench]\nn = [2, 3, 4]\n").unwrap();
    let out = tmp.path().join("fig2");
    ok(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "reproduce", "fig2"]);
    let csv = out.join("fig2_min.csv");
    assert_eq!(column(&csv, "n"), ["2", "2", "3", "3", "4", "4"]);
    let m = manifest(&out);
    assert_eq!(m["config"]["bench"]["n"], serde_json::json!([2, 3, 4]));
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn stochastic_runs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("fig3.toml");
    fs::write(
        &cfg,
        "[bench]\nn = [2, 4]\nrepetitions = 2\n[estimator]\nepsilon = 0.2\nwindow = 20\n[sampler]\nshot_cap = 100000\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = tmp.path().join(name);
        ok(&["--seed", "11", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "reproduce", "fig3"]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["fig3_rotated-min.csv", "fig3_rotated-shadow.csv"] {
        let bytes = fs::read(a.join(file)).unwrap();
        assert_eq!(bytes, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(rows(&a.join(file)).len(), 4);
    }
    assert!(!a.join("fig3.partial.csv").exists());
    assert_eq!(manifest(&a)["seed"], 11);
}

#[test]
fn stochastic_run_without_seed_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let out = lowdeg(&["--out", tmp.path().to_str().unwrap(), "reproduce", "fig3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[channel]\nnoise = 0.1\n").unwrap();
    let out = lowdeg(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "reproduce", "fig2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("noise"));
}
