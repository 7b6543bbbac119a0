//! The `bg0opt` binary end to end.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bg0opt"))
}

#[test]
fn bound_prints_value_first() {
    let out = bin()
        .args([
            "bound", "--method", "nsgdm", "--regime", "smooth", "--delta", "1", "--gamma0", "1", "--L0", "1", "--B",
            "0", "--G", "0", "--T", "1000000",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next(), Some("1.80002"));
}

#[test]
fn run_without_objective_fails_with_usage() {
    let out = bin().args(["run", "--T", "10"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("Usage"));
}

#[test]
fn unknown_subcommand_fails() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exits_zero() {
    let out = bin().arg("verify").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args([
                "run",
                "--objective",
                "cubic",
                "--T",
                "200",
                "--method",
                "nsgdm",
                "--method",
                "nstorm",
                "--method",
            ])
            .args(["sgd_dynamic", "--seeds", "0,1,2", "--format", "csv,json", "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(std::fs::read(out_dir.join("cubic.csv")).unwrap());
        assert!(out_dir.join("cubic_grad_norm_vs_sfo.svg").exists());
    }
    assert_eq!(csv[0], csv[1]);
}
