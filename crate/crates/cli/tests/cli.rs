use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cbspart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbspart"))
        .current_dir(dir)
        .env_remove("CBSPART_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = cbspart(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn body(path: &Path) -> Vec<Vec<usize>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(' ').map(|t| t.parse().unwrap()).collect())
        .collect()
}

fn steps(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn jump_model_splits_without_fallback() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "partition",
            "--model",
            "square-jump-ab",
            "--method",
            "cbs",
            "--max-size",
            "190",
            "-o",
            "sj",
        ],
    );
    let parts = body(&d.path().join("sj.partition"));
    assert!(parts.len() >= 2);
    let log = steps(&d.path().join("sj.steps.json"));
    assert_eq!(log["status"], "ok");
    assert_eq!(log["fallback_steps"], 0);
    assert!(!log["steps"].as_array().unwrap().is_empty());
    let grid = std::fs::read_to_string(d.path().join("sj.grid.csv")).unwrap();
    assert_eq!(grid.lines().filter(|l| !l.starts_with('#')).count(), 401);
}

#[test]
fn rsb_and_cbs_agree_on_constant_model() {
    let d = tempfile::tempdir().unwrap();
    for m in ["rsb", "cbs"] {
        ok(
            d.path(),
            &[
                "partition",
                "--model",
                "constant",
                "--method",
                m,
                "--max-size",
                "40",
                "-o",
                m,
            ],
        );
    }
    assert_eq!(
        body(&d.path().join("rsb.partition")),
        body(&d.path().join("cbs.partition"))
    );
    let log = steps(&d.path().join("cbs.steps.json"));
    assert_eq!(
        log["fallback_steps"],
        log["steps"].as_array().unwrap().len()
    );
}

#[test]
fn matrix_file_partition_respects_max_size() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["gen", "--model", "checker-a", "-o", "c.mtx"]);
    ok(
        d.path(),
        &[
            "partition",
            "--matrix",
            "c.mtx",
            "--method",
            "cbs",
            "--max-size",
            "90",
        ],
    );
    let parts = body(&d.path().join("c.partition"));
    let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..400).collect::<Vec<_>>());
    assert!(parts.iter().all(|p| p.len() <= 90));
    assert!(!d.path().join("c.grid.csv").exists());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        cbspart(d.path(), &["partition", "--matrix", "missing.mtx"])
            .status
            .code(),
        Some(2)
    );

    std::fs::write(d.path().join("junk.mtx"), "not a matrix\n").unwrap();
    assert_eq!(
        cbspart(d.path(), &["partition", "--matrix", "junk.mtx"])
            .status
            .code(),
        Some(2)
    );

    std::fs::write(
        d.path().join("indef.mtx"),
        "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 2\n2 2 1\n",
    )
    .unwrap();
    assert_eq!(
        cbspart(d.path(), &["partition", "--matrix", "indef.mtx"])
            .status
            .code(),
        Some(3)
    );

    let out = cbspart(
        d.path(),
        &[
            "partition",
            "--model",
            "checker-a",
            "--max-size",
            "50",
            "--eig-max-iter",
            "1",
            "-o",
            "f",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
    let log = steps(&d.path().join("f.steps.json"));
    assert_eq!(log["status"], "failed");
    assert!(log["error"].as_str().unwrap().contains("converge"));
    assert!(!d.path().join("f.partition").exists());

    assert_eq!(
        cbspart(d.path(), &["partition", "--bogus"]).status.code(),
        Some(1)
    );
}

#[test]
fn outputs_are_reproducible_and_echo_config() {
    let d = tempfile::tempdir().unwrap();
    for p in ["a", "b"] {
        ok(
            d.path(),
            &[
                "partition",
                "--model",
                "checker-ab",
                "--max-size",
                "50",
                "-o",
                p,
            ],
        );
    }
    for ext in [".partition", ".steps.json", ".grid.csv"] {
        let a = std::fs::read(d.path().join(format!("a{ext}"))).unwrap();
        let b = std::fs::read(d.path().join(format!("b{ext}"))).unwrap();
        assert_eq!(a, b, "{ext} differs");
    }
    let head = std::fs::read_to_string(d.path().join("a.partition")).unwrap();
    assert!(head.contains("\"load_balance\":0.8"));
    assert!(head.contains("\"seed\":42"));
}

#[test]
fn seed_env_override() {
    let d = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cbspart"))
        .current_dir(d.path())
        .env("CBSPART_SEED", "7")
        .args([
            "partition",
            "--model",
            "checker-ab",
            "--max-size",
            "50",
            "-o",
            "s",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let log = steps(&d.path().join("s.steps.json"));
    assert_eq!(log["config"]["partition"]["seed"], 7);
}

#[test]
fn bench_rows_and_missing_matrices() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("suite")).unwrap();
    ok(
        d.path(),
        &[
            "bench",
            "--models",
            "square-jump-a",
            "--suite",
            "suite",
            "--matrices",
            "bcsstk13",
            "--seeds",
            "1,2",
            "-o",
            "t",
        ],
    );
    let csv = std::fs::read_to_string(d.path().join("t.bench.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 10);
    let iters = |m: &str| -> f64 {
        rows.iter()
            .find(|r| r[0] == "square-jump-a" && r[2] == m)
            .unwrap()[5]
            .parse()
            .unwrap()
    };
    for m in ["cbs", "mincut", "mcut", "rsb"] {
        assert!(iters("none") >= iters(m));
    }
    assert!(iters("cbs") < iters("rsb"));
    let missing: Vec<_> = rows.iter().filter(|r| r[0] == "bcsstk13").collect();
    assert_eq!(missing.len(), 5);
    assert!(missing.iter().all(|r| r[6] == "missing" && r[5].is_empty()));
}

#[test]
fn solve_reports_convergence() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(
        d.path(),
        &[
            "solve",
            "--model",
            "checker-ab",
            "--max-size",
            "50",
            "--seeds",
            "1",
        ],
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_converged"], true);
    assert_eq!(v["subdomains"], 16);

    ok(
        d.path(),
        &[
            "partition",
            "--model",
            "checker-ab",
            "--max-size",
            "50",
            "-o",
            "p",
        ],
    );
    let out = ok(
        d.path(),
        &[
            "solve",
            "--model",
            "checker-ab",
            "--partition",
            "p.partition",
            "--seeds",
            "1",
            "--overlap",
            "1",
        ],
    );
    let w: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(w["mean_iterations"].as_f64().unwrap() <= v["mean_iterations"].as_f64().unwrap());
}
