//! End-to-end checks of the command-line surface: exit codes, the flag
//! grammar, data-file parsing, and output layout.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sievemix")
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fresh_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("sievemix-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let output = Command::new(bin()).arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(!output.stderr.is_empty(), "usage text expected on stderr");
}

#[test]
fn help_exits_zero() {
    let output = Command::new(bin()).arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    for sub in [
        "fit",
        "simulate",
        "failure-demo",
        "degenerate-demo",
        "bounds",
        "margin",
        "check-family",
    ] {
        assert!(text.contains(sub), "help does not mention {sub}");
    }
}

#[test]
fn missing_config_is_validation_error() {
    let output = Command::new(bin()).args(["simulate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn violated_context_precondition_exits_2() {
    let dir = fresh_dir("bad-context");
    let cfg = dir.join("ctx.toml");
    std::fs::write(
        &cfg,
        "kappa0 = \"1\"\nc0 = \"1\"\na0 = \"1\"\nzeta = \"1\"\n\n[[family]]\nkind = \"uniform\"\n",
    )
    .unwrap();
    let output = Command::new(bin())
        .args([
            "bounds",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("c0 < v0/(kappa0"),
        "error names the failed inequality: {err}"
    );
}

#[test]
fn fit_with_n_auto_derives_floor_from_line_count() {
    let dir = fresh_dir("fit-n-auto");
    let data_path = dir.join("points.txt");
    let mut text = String::from("# sample\n");
    for i in 0..500 {
        text.push_str(&format!(
            "{}\n",
            (i as f64 * 0.173).sin() * 2.0 + (i % 2) as f64 * 4.0
        ));
    }
    std::fs::write(&data_path, text).unwrap();

    let out = dir.join("out");
    let status = Command::new(bin())
        .args([
            "fit",
            "--data",
            data_path.to_str().unwrap(),
            "--spec",
            fixtures().join("two_normal_spec.toml").to_str().unwrap(),
            "--n-auto",
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let fit = std::fs::read_to_string(out.join("fit.toml")).unwrap();
    assert!(fit.contains("n = \"500\""));
    // Floor recomputed from the line count: log c_n = -sqrt(500).
    let expect = -(500.0f64).sqrt();
    let line = fit.lines().find(|l| l.starts_with("log_floor")).unwrap();
    let value: f64 = line.split('"').nth(1).unwrap().parse().unwrap();
    assert!(
        (value - expect).abs() < 1e-12,
        "log floor {value} vs {expect}"
    );
    assert!(out.join("manifest.toml").exists());
}

#[test]
fn fit_rejects_mismatched_configured_n() {
    let dir = fresh_dir("fit-n-mismatch");
    let data_path = dir.join("points.txt");
    std::fs::write(&data_path, "0.1\n0.2\n0.3\n").unwrap();
    let spec = dir.join("spec.toml");
    std::fs::write(
        &spec,
        "n = \"10\"\n\n[schedule]\nc0 = \"1\"\nd = \"0.5\"\n\n[[family]]\nkind = \"normal\"\n",
    )
    .unwrap();
    let output = Command::new(bin())
        .args([
            "fit",
            "--data",
            data_path.to_str().unwrap(),
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            dir.join("out").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn simulate_writes_expected_outputs() {
    let dir = fresh_dir("simulate-outputs");
    let status = Command::new(bin())
        .args([
            "simulate",
            "--config",
            fixtures().join("consistency_small.toml").to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    for name in [
        "report.csv",
        "summary.toml",
        "dist_vs_n.svg",
        "manifest.toml",
    ] {
        assert!(dir.join(name).exists(), "{name} missing");
    }
    let report = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schedule,n,rep,seed,param_dist,l1_dist,loglik_hat,loglik_true,floor_active_count"
    );
    // 1 schedule x 2 sample sizes x 2 reps.
    assert_eq!(lines.count(), 4);
    let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
    assert!(manifest.contains("config_sha256"));
    assert!(manifest.contains("version"));
}

#[test]
fn seed_override_changes_the_report() {
    let dir_a = fresh_dir("seed-a");
    let dir_b = fresh_dir("seed-b");
    for (dir, seed) in [(&dir_a, "11"), (&dir_b, "12")] {
        let status = Command::new(bin())
            .args([
                "simulate",
                "--config",
                fixtures().join("consistency_small.toml").to_str().unwrap(),
                "--out",
                dir.to_str().unwrap(),
                "--seed",
                seed,
                "--quiet",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir_a.join("report.csv")).unwrap();
    let b = std::fs::read(dir_b.join("report.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn degenerate_demo_runs_from_config() {
    let dir = fresh_dir("degen");
    let cfg = dir.join("degen.toml");
    std::fs::write(
        &cfg,
        r#"
n = "50"
seed = "1"
sigma_start = "1"
halvings = "40"

[schedule]
c0 = "1"
d = "0.5"

[[truth]]
alpha = "0.5"
kind = "normal"
mu = "0"
sigma = "1"

[[truth]]
alpha = "0.5"
kind = "normal"
mu = "4"
sigma = "1"
"#,
    )
    .unwrap();
    let out = dir.join("out");
    let status = Command::new(bin())
        .args([
            "degenerate-demo",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--quiet",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let path = std::fs::read_to_string(out.join("path.csv")).unwrap();
    assert!(path.starts_with("sigma,loglik\n"));
    assert_eq!(path.lines().count(), 42); // header + 41 path points
    let summary = std::fs::read_to_string(out.join("summary.toml")).unwrap();
    let excess: f64 = summary
        .lines()
        .find(|l| l.starts_with("excess"))
        .unwrap()
        .split('"')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(excess > 10.0, "excess {excess}");
}
