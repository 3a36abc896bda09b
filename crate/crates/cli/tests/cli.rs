//! End-to-end checks of the `mimocap` binary: exit codes, config handling and
//! reproducibility of the CSV artifact.

use std::path::Path;
use std::process::Command;

fn mimocap() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mimocap"))
}

#[test]
fn limits_exits_zero() {
    let out = mimocap()
        .args(["limits", "--nt", "4", "--nr", "4", "--kappa", "0.05"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("34.5898"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    // Unknown flags are a clap usage error.
    let out = mimocap().args(["sweep", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    // So is an invalid grid.
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("o.csv");
    let out = mimocap()
        .args(["sweep", "--scenario", "custom", "--snr-db-step", "0"])
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());

    // And a config file with an unknown key.
    let cfg = dir.path().join("cfg");
    std::fs::write(&cfg, "bogus=1\n").unwrap();
    let out = mimocap()
        .args(["sweep", "--scenario", "custom"])
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown key 'bogus'"), "{err}");
}

#[test]
fn runtime_errors_exit_three() {
    let out = mimocap()
        .args([
            "sweep",
            "--scenario",
            "custom",
            "--nt",
            "1",
            "--nr",
            "1",
            "--kappa",
            "0",
            "--snr-db",
            "0",
            "--trials",
            "2",
            "--out",
            "/nonexistent-dir/o.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn kappa_flag_overrides_config_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg");
    std::fs::write(
        &cfg,
        "scenario=custom\nkappa=0.05\nnt=2\nnr=2\nsnr_db_start=10\nsnr_db_stop=10\ntrials=2\n",
    )
    .unwrap();
    let out_path = dir.path().join("o.csv");
    let out = mimocap()
        .args(["sweep", "--kappa", "0.1"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.contains("# kappa=0.1"), "{csv}");
}

fn run_fig2_sweep(out_path: &Path, threads: &str) -> Vec<u8> {
    let out = mimocap()
        .args([
            "sweep",
            "--scenario",
            "fig2",
            "--snr-db-start",
            "0",
            "--snr-db-stop",
            "20",
            "--snr-db-step",
            "10",
            "--trials",
            "40",
            "--seed",
            "7",
            "--threads",
            threads,
        ])
        .arg("--out")
        .arg(out_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(out_path).unwrap()
}

#[test]
fn csv_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_fig2_sweep(&dir.path().join("a.csv"), "1");
    let b = run_fig2_sweep(&dir.path().join("b.csv"), "8");
    assert_eq!(a, b);
}

#[test]
fn threads_env_is_honored_when_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("o.csv");
    let out = mimocap()
        .env("MIMOCAP_THREADS", "2")
        .args([
            "sweep", "--scenario", "custom", "--nt", "2", "--nr", "2", "--kappa", "0.05",
            "--snr-db", "0", "--trials", "4",
        ])
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
