//! End-to-end tests of the `moneta` binary: subcommands, exit statuses, and
//! file outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn moneta(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moneta"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_suite(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn small_opinion_suite() -> &'static str {
    r#"
name = "deffuant-opinion"
seeds = [1, 2]

[config]
n = 10
mode = { kind = "opinion", confidence-threshold = 1.0 }
initial-money = { kind = "iid-uniform", lo = 0.0, hi = 1.0 }
graph = { kind = "complete" }
pairs = { kind = "all-pairs" }
mu = { declared-regime = "contractive", dist = { kind = "uniform", lo = 0.1, hi = 0.5 } }
steps = 20000
seed = 1
stop-on-consensus = true
record-every = 10
"#
}

#[test]
fn run_writes_trajectories_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    let out = moneta(&["run", &config, "--out", "out"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for seed in [1, 2] {
        assert!(dir
            .path()
            .join(format!("out/deffuant-opinion-seed{seed}.csv"))
            .exists());
        assert!(dir
            .path()
            .join(format!("out/deffuant-opinion-seed{seed}.meta.toml"))
            .exists());
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("consensus at step"));
}

#[test]
fn rerun_is_byte_identical_and_meta_replays() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    assert!(moneta(&["run", &config, "--out", "a"], dir.path())
        .status
        .success());
    assert!(moneta(&["run", &config, "--out", "b"], dir.path())
        .status
        .success());
    let a = fs::read(dir.path().join("a/deffuant-opinion-seed1.csv")).unwrap();
    let b = fs::read(dir.path().join("b/deffuant-opinion-seed1.csv")).unwrap();
    assert_eq!(a, b);

    // The sidecar is itself a runnable suite pinned to one seed.
    let meta = dir.path().join("a/deffuant-opinion-seed1.meta.toml");
    let out = moneta(&["run", meta.to_str().unwrap(), "--out", "c"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let c = fs::read(dir.path().join("c/deffuant-opinion-seed1.csv")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn jsonl_format_and_record_every_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    let out = moneta(
        &[
            "run",
            &config,
            "--out",
            "out",
            "--format",
            "jsonl",
            "--record-every",
            "50",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("out/deffuant-opinion-seed1.jsonl")).unwrap();
    let snapshots = text.lines().filter(|l| l.contains("sorted_money")).count();
    let rows = text.lines().count();
    assert!(
        snapshots > 0 && snapshots <= rows / 50 + 1,
        "{snapshots} of {rows}"
    );
}

#[test]
fn verify_passes_on_good_suite() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    let out = moneta(&["verify", &config], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS: conservation"));
    assert!(stdout.contains("all checks passed"));
}

#[test]
fn verify_fails_with_exit_1_when_assertions_fail() {
    let dir = tempfile::tempdir().unwrap();
    let starved = small_opinion_suite().replace("steps = 20000", "steps = 12");
    let config = write_suite(dir.path(), "suite.toml", &starved);
    let out = moneta(&["verify", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();

    // Syntax error.
    let bad = write_suite(dir.path(), "bad.toml", "name = [");
    assert_eq!(moneta(&["run", &bad], dir.path()).status.code(), Some(2));

    // Unknown key.
    let unknown = small_opinion_suite().replace("seeds = [1, 2]", "seeds = [1]\nbogus = 3");
    let unknown = write_suite(dir.path(), "unknown.toml", &unknown);
    assert_eq!(
        moneta(&["run", &unknown], dir.path()).status.code(),
        Some(2)
    );

    // Hypothesis violation: equal-wealth with expansive mixing.
    let mismatch = small_opinion_suite()
        .replace("deffuant-opinion", "equal-wealth")
        .replace(
            r#"mode = { kind = "opinion", confidence-threshold = 1.0 }"#,
            r#"mode = { kind = "money" }"#,
        )
        .replace(
            r#"mu = { declared-regime = "contractive", dist = { kind = "uniform", lo = 0.1, hi = 0.5 } }"#,
            r#"mu = { dist = { kind = "uniform", lo = 1.0, hi = 1.5 } }
credit-limits = { kind = "constant", value = 10.0 }"#,
        );
    let mismatch = write_suite(dir.path(), "mismatch.toml", &mismatch);
    let out = moneta(&["verify", &mismatch], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("contractive"));

    // Missing file.
    assert_eq!(
        moneta(&["run", "nope.toml"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_overrides_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    let out = moneta(
        &["sweep", &config, "--seeds", "5..8", "--out", "out"],
        dir.path(),
    );
    assert!(out.status.success());
    for seed in 5..8 {
        assert!(dir
            .path()
            .join(format!("out/deffuant-opinion-seed{seed}.csv"))
            .exists());
    }
    assert!(!dir.path().join("out/deffuant-opinion-seed8.csv").exists());

    let out = moneta(
        &["sweep", &config, "--seeds", "8..=9", "--out", "out"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(dir.path().join("out/deffuant-opinion-seed9.csv").exists());

    let out = moneta(
        &["sweep", &config, "--seeds", "oops", "--out", "out"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn summarize_produces_tables_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_suite(dir.path(), "suite.toml", small_opinion_suite());
    assert!(moneta(
        &["run", &config, "--out", "out", "--format", "jsonl"],
        dir.path()
    )
    .status
    .success());
    let out = moneta(
        &[
            "summarize",
            "out/deffuant-opinion-seed1.jsonl",
            "out/deffuant-opinion-seed2.jsonl",
            "--out",
            "summary",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("deffuant-opinion (2 trajectories)"));
    assert!(stdout.contains("consensus_time"));
    assert!(dir.path().join("summary/summary.csv").exists());
    assert!(dir.path().join("summary/curves.csv").exists());

    // No input files is a usage error (clap arity).
    let out = moneta(&["summarize"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_backend_runs_from_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let exact = small_opinion_suite()
        .replace("steps = 20000", "steps = 200")
        .replace("seeds = [1, 2]", "seeds = [1]")
        .replace("stop-on-consensus = true", "stop-on-consensus = false");
    let config = write_suite(dir.path(), "suite.toml", &exact);
    let out = moneta(&["run", &config, "--out", "out", "--exact"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("out/deffuant-opinion-seed1.csv")).unwrap();
    assert_eq!(text.lines().count(), 201);
    // Exact backend: every recorded residual is exactly zero.
    for line in text.lines().skip(1) {
        let residual = line.split(',').nth(8).unwrap();
        assert_eq!(residual, "0");
    }
}
