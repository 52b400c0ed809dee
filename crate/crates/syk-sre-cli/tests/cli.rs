use std::fs;
use std::path::Path;
use std::process::Command;

use syk_sre_cli::{render_csv, CSV_HEADER};

const BIN: &str = env!("CARGO_BIN_EXE_syk-sre");

fn run_cli(mode: &str, config: &str, out: &Path) -> (i32, String) {
    let cfg_dir = tempfile::tempdir().unwrap();
    let cfg_path = cfg_dir.path().join("run.cfg");
    fs::write(&cfg_path, config).unwrap();
    let o = Command::new(BIN)
        .args([mode, "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "1"])
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr))
}

const THERMAL: &str = "mode = thermal\nj = 1\nmu = 0.1\nbetas = 2, 3, 4\nslices_m = 64\n";

#[test]
fn same_config_gives_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_cli("thermal", THERMAL, &a).0, 0);
    assert_eq!(run_cli("thermal", THERMAL, &b).0, 0);
    let ta = fs::read(a.join("thermal.csv")).unwrap();
    assert_eq!(ta, fs::read(b.join("thermal.csv")).unwrap());
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest-sha256: "));
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    let manifest = fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status = ok") || manifest.contains("status: ok"), "{manifest}");
}

#[test]
fn ed_mode_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = ed\nn = 2\nj = 1\nmu = 0.2\nbetas = 1, 2\nsamples = 3\nseed = 7\n";
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_cli("ed", cfg, &a).0, 0);
    assert_eq!(run_cli("ed", cfg, &b).0, 0);
    assert_eq!(fs::read(a.join("ed.csv")).unwrap(), fs::read(b.join("ed.csv")).unwrap());
}

#[test]
fn unconverged_points_are_written_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial");
    let cfg = "mode = sre\nj = 1\nmu = 0.1\nbeta = 6\nslices_m = 32\ninit = disconnected\nmax_iter = 2\n";
    let (code, log) = run_cli("sre", cfg, &out);
    assert_eq!(code, 1, "{log}");
    let csv = fs::read_to_string(out.join("sre.csv")).unwrap();
    assert!(csv.lines().skip(2).any(|l| l.ends_with(",false")), "{csv}");
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("partial"), "{manifest}");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad");
    let (code, log) = run_cli("sre", "mode = sre\nj = 1\nmu = 0.1\nbetas = 1, 3\nslices_m = 16\n", &out);
    assert_eq!(code, 2);
    assert!(log.contains("doubling policy"), "{log}");
    let (code, _) = run_cli("sre", THERMAL, &out);
    assert_eq!(code, 2, "mode mismatch");
    assert!(!out.exists(), "nothing is written on config errors");
}

#[test]
fn unwritable_output_fails_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let (code, log) = run_cli("thermal", THERMAL, &blocker.join("sub"));
    assert_eq!(code, 1, "{log}");
}

#[test]
fn check_mode_runs_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN).args(["check", "--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(dir.path().join("check.csv").exists());
}

#[test]
fn empty_table_is_header_only() {
    let text = render_csv(&[], "abc");
    assert_eq!(text, format!("# manifest-sha256: abc\n{CSV_HEADER}\n"));
}
