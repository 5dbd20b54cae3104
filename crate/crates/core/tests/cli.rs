//! End-to-end runs of the `disflux` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn disflux(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disflux"))
        .args(args)
        .env("DISFLUX_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn run_in(cmd: &str, cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = config(cfg);
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    disflux(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn solve_writes_snapshots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in("solve", "lwr_jump.toml", dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let snaps = std::fs::read_to_string(dir.path().join("snapshots.csv")).unwrap();
    assert!(snaps.starts_with("t,x_center,u\n"));
    // 11 snapshots of 200 cells plus the header
    assert_eq!(snaps.lines().count(), 11 * 200 + 1);
    let manifest = std::fs::read_to_string(dir.path().join("run_manifest.toml")).unwrap();
    assert!(manifest.contains("command = \"solve\""));
    assert!(manifest.contains("config_sha256"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(code(&run_in("solve", "lwr_jump.toml", d.path(), &[])), 0);
    }
    for f in ["snapshots.csv", "traces.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn w_sweep_on_lwr_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in("w-sweep", "lwr_jump.toml", dir.path(), &["--samples", "100000"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("w_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("n_pairs"), "100000");
    assert_eq!(col("violations"), "0");
    assert_eq!(col("verdict"), "PASS");
}

#[test]
fn frozen_expansion_shock_fails_entropy_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in("check-entropy", "burgers_expansion.toml", dir.path(), &["--frozen"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("entropy_summary.csv").exists());
}

#[test]
fn bad_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nkernel = \"lwr\"\nx_lo = 1.0\nx_hi = -1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = disflux(&["solve", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());

    let missing = dir.path().join("nope.toml");
    let o = disflux(&["solve", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&disflux(&["solve", "--bogus"])), 1);
}

#[test]
fn germ_prints_one_row() {
    let o = disflux(&[
        "germ", "--kernel", "burgers", "--k-left", "1", "--k-right", "1", "--u-minus", "1",
        "--u-plus", "-1", "--u-min", "-1", "--u-max", "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("kernel,k_left,k_right,u_minus,u_plus,u_hat"));
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "burgers");
    assert_eq!(row[7], "true");

    let o = disflux(&[
        "germ", "--kernel", "burgers", "--k-left", "1", "--k-right", "1", "--u-minus", "-1",
        "--u-plus", "1", "--u-hat", "0", "--u-min", "-1", "--u-max", "1",
    ]);
    assert_eq!(code(&o), 2);
}
