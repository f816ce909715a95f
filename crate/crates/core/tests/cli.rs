//! End-to-end checks of the command line binary: exit codes, artifact
//! layout, determinism across runs and worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_grale")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("grale-cli-{}-{name}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .env_remove("GRALE_OUT")
        .output()
        .unwrap()
}

const QUICK_FIELD_CONFIG: &str = r#"
experiment = "field-modulus"
alpha = [0.4]
delta = [0.25, 0.125, 0.0625]
p_grid = [3.0, 4.0, 6.0, 8.0]

[model]
kind = "brownian_motion"
n = 513

[mc]
paths = 400
modulus_paths = 150
"#;

#[test]
fn passing_run_exits_zero_and_writes_both_artifacts() {
    let dir = scratch("pass");
    let out = run_in(&dir, &["glnorm", "--format", "both", "--out", "art"]);
    assert!(out.status.success(), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("art/glnorm.csv")).unwrap();
    assert!(csv.starts_with("# glnorm v1\n"), "{csv}");
    let json = std::fs::read_to_string(dir.join("art/glnorm.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["passed"], serde_json::Value::Bool(true));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("glnorm: PASS"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn failed_check_exits_one_but_still_writes() {
    let dir = scratch("fail");
    std::fs::write(
        dir.join("cfg.toml"),
        r#"
        experiment = "glnorm"
        [function]
        kind = "power"
        exponent = 1.0
        [grid]
        n = 257
        [weight]
        family = "degenerate"
        r = 2.0
        value = 1.0
        [checks]
        expected = 0.9
        rel_tol = 0.001
        "#,
    )
    .unwrap();
    let out = run_in(&dir, &["glnorm", "--config", "cfg.toml", "--out", "art"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(dir.join("art/glnorm.csv").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("glnorm: FAIL"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_input_exits_two_and_writes_nothing() {
    let dir = scratch("bad");
    // unknown key
    std::fs::write(dir.join("junk.toml"), "experiment = \"glnorm\"\nbogus = 1\n").unwrap();
    let out = run_in(&dir, &["glnorm", "--config", "junk.toml", "--out", "art"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    // out-of-range parameter caught before any file is created
    std::fs::write(
        dir.join("range.toml"),
        "experiment = \"exactness\"\nalpha = [0.5]\np = 4.0\nexcess = [0.9]\ndelta = [0.001]\n",
    )
    .unwrap();
    let out = run_in(&dir, &["exactness", "--config", "range.toml", "--out", "art"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(!dir.join("art").exists());
    // missing config file
    let out = run_in(&dir, &["glnorm", "--config", "absent.toml"]);
    assert_eq!(out.status.code(), Some(2));
    // unknown subcommand is a usage error
    let out = run_in(&dir, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn runs_are_byte_identical_across_worker_counts() {
    let dir = scratch("det");
    std::fs::write(dir.join("cfg.toml"), QUICK_FIELD_CONFIG).unwrap();
    let a = run_in(
        &dir,
        &[
            "field-modulus",
            "--config",
            "cfg.toml",
            "--workers",
            "1",
            "--format",
            "both",
            "--out",
            "a",
        ],
    );
    assert!(a.status.success(), "{a:?}");
    let b = run_in(
        &dir,
        &[
            "field-modulus",
            "--config",
            "cfg.toml",
            "--workers",
            "3",
            "--format",
            "both",
            "--out",
            "b",
        ],
    );
    assert!(b.status.success(), "{b:?}");
    let csv_a = std::fs::read(dir.join("a/field-modulus.csv")).unwrap();
    let csv_b = std::fs::read(dir.join("b/field-modulus.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    let json_a = std::fs::read(dir.join("a/field-modulus.json")).unwrap();
    let json_b = std::fs::read(dir.join("b/field-modulus.json")).unwrap();
    assert_eq!(json_a, json_b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn the_seed_flag_changes_the_draws() {
    let dir = scratch("seed");
    std::fs::write(dir.join("cfg.toml"), QUICK_FIELD_CONFIG).unwrap();
    for (seed, sub) in [("1", "s1"), ("2", "s2")] {
        let out = run_in(
            &dir,
            &[
                "field-modulus",
                "--config",
                "cfg.toml",
                "--seed",
                seed,
                "--out",
                sub,
            ],
        );
        assert!(out.status.success(), "{out:?}");
    }
    let a = std::fs::read(dir.join("s1/field-modulus.csv")).unwrap();
    let b = std::fs::read(dir.join("s2/field-modulus.csv")).unwrap();
    assert_ne!(a, b);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn printed_defaults_parse_back() {
    let dir = scratch("defaults");
    let out = run_in(&dir, &["defaults", "certify-1d"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(
        doc.get("experiment").and_then(|v| v.as_str()),
        Some("certify-1d")
    );
    let out = run_in(&dir, &["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# certify-nd"));
    std::fs::remove_dir_all(&dir).ok();
}
