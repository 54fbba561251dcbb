//! End-to-end tests of the `metacode` binary: argument validation, output
//! determinism and the dataset conversion round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_metacode"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary launches");
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Generate a small synthetic dataset in `dir` and return its path as a
/// string.
fn synth_into(dir: &Path) -> String {
    let path = dir.join("ds");
    run_ok(&[
        "synth",
        "--nodes",
        "24",
        "--communities",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    path.to_str().unwrap().to_string()
}

const FAST_RUN: &[&str] = &[
    "--budget",
    "3",
    "--hidden-dim",
    "8",
    "--epochs-init",
    "20",
    "--epochs-step",
    "5",
];

#[test]
fn run_emits_deterministic_jsonl() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let args: Vec<&str> = ["run", "--dataset", &ds].iter().copied().chain(FAST_RUN.iter().copied()).collect();
    let first = run_ok(&args);
    let second = run_ok(&args);
    assert_eq!(first.stdout, second.stdout);

    let text = String::from_utf8(first.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // One baseline record, three query records, one summary.
    assert_eq!(lines.len(), 5);
    for (i, line) in lines.iter().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], 1);
        let expected = if i == lines.len() - 1 { "summary" } else { "step" };
        assert_eq!(v["record"], expected);
    }
    let summary: serde_json::Value = serde_json::from_str(lines[4]).unwrap();
    assert_eq!(summary["n_queries"], 3);
    assert_eq!(summary["config"]["budget"], serde_json::json!({"absolute": 3}));
}

#[test]
fn run_seed_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let base: Vec<&str> = ["run", "--dataset", &ds].iter().copied().chain(FAST_RUN.iter().copied()).collect();
    let mut seeded = base.clone();
    seeded.extend(["--seed", "7"]);
    let a = run_ok(&base);
    let b = run_ok(&seeded);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn run_writes_out_file_instead_of_stdout() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let out_path = tmp.path().join("trace.jsonl");
    let mut args: Vec<&str> =
        ["run", "--dataset", &ds].iter().copied().chain(FAST_RUN.iter().copied()).collect();
    let out_str = out_path.to_str().unwrap().to_string();
    args.extend(["--out", &out_str]);
    let out = run_ok(&args);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn budget_flags_are_required_and_exclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    // Missing budget: clap usage error (exit code 2).
    let missing = bin().args(["run", "--dataset", &ds]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    // Both budget forms at once: also a usage error.
    let both = bin()
        .args(["run", "--dataset", &ds, "--budget", "3", "--budget-pct", "10"])
        .output()
        .unwrap();
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn gradcheck_exit_code_tracks_the_verdict() {
    let pass = run_ok(&["gradcheck", "--instances", "4"]);
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8(pass.stdout).unwrap().trim()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["instances"], 4);

    // An absurd tolerance makes the same check fail with a nonzero code.
    let fail = bin()
        .args(["gradcheck", "--instances", "2", "--tolerance", "1e-18"])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
    let v: serde_json::Value =
        serde_json::from_str(String::from_utf8(fail.stdout).unwrap().trim()).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn convert_ego_then_canonical_is_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let ego_dir = tmp.path().join("ego");
    std::fs::create_dir(&ego_dir).unwrap();
    std::fs::write(ego_dir.join("0.feat"), "5 1 0 0 1\n9 0 1 1 0\n12 1 1 0 0\n").unwrap();
    std::fs::write(ego_dir.join("0.egofeat"), "1 0 0 0\n").unwrap();
    std::fs::write(ego_dir.join("0.edges"), "5 9\n9 5\n9 12\n").unwrap();
    std::fs::write(ego_dir.join("0.circles"), "circle0\t5\t9\ncircle1\t12\n").unwrap();

    let ego_stem = ego_dir.join("0");
    let first = tmp.path().join("canonical1");
    let second = tmp.path().join("canonical2");
    run_ok(&[
        "convert",
        "--dataset",
        ego_stem.to_str().unwrap(),
        "--format",
        "ego",
        "--out",
        first.to_str().unwrap(),
    ]);
    // Converting the canonical output again must reproduce it byte for
    // byte.
    run_ok(&[
        "convert",
        "--dataset",
        first.to_str().unwrap(),
        "--format",
        "canonical",
        "--out",
        second.to_str().unwrap(),
    ]);
    for name in ["meta.json", "edges.tsv", "features.tsv", "communities.tsv"] {
        let a = std::fs::read(first.join(name)).unwrap();
        let b = std::fs::read(second.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs across conversions");
    }

    // The converted dataset is runnable.
    run_ok(&[
        "run",
        "--dataset",
        first.to_str().unwrap(),
        "--budget",
        "2",
        "--hidden-dim",
        "4",
        "--epochs-init",
        "5",
        "--epochs-step",
        "2",
        "--knn-k",
        "1",
        "--init",
        "knn",
    ]);
}

#[test]
fn sweep_and_curve_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = synth_into(tmp.path());
    let common = [
        "--dataset",
        &ds,
        "--strategies",
        "rs,dfs",
        "--budgets",
        "10,20",
        "--seeds",
        "0,1",
        "--hidden-dim",
        "4",
        "--epochs-init",
        "10",
        "--epochs-step",
        "5",
    ];

    let sweep = run_ok(&[&["sweep"], &common[..]].concat());
    let cells: serde_json::Value =
        serde_json::from_str(&String::from_utf8(sweep.stdout).unwrap()).unwrap();
    let cells = cells.as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for cell in cells {
        assert_eq!(cell["n_runs"], 2);
        assert_eq!(cell["errors"].as_array().unwrap().len(), 0);
    }

    let curve = run_ok(&[&["curve"], &common[..]].concat());
    let text = String::from_utf8(curve.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "budget_pct,strategy,n_explored_mean,n_explored_std");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("10,dfs,"));
    assert!(lines[2].starts_with("10,rs,"));
}
