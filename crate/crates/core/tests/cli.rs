//! End-to-end tests of the `nelson-lab` binary: exit codes, artifact
//! emission, and cache-hit byte identity.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nelson-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["sweep"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--config"), "stderr: {err}");
}

#[test]
fn unknown_preset_is_a_config_error() {
    let out = run(&["--preset", "does_not_exist", "sweep"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_config_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
q = 1.0
kappas = [0.2, 1.5]

[potential]
kind = "harmonic"
omega0 = 1.0
declared_class = "C1"
c1 = 2.0
c2 = 0.0
"#,
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "sweep"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kappas[1]"), "stderr: {err}");
}

#[test]
fn atomic_emits_level_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--preset",
        "harmonic_c1",
        "--out",
        out_dir.to_str().unwrap(),
        "atomic",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out_dir, "atomic.json")).unwrap();
    let energies = report["energies"].as_array().unwrap();
    assert_eq!(energies.len(), 4);
    // 1d harmonic levels 0.5, 1.5 up to grid discretization error
    assert!((energies[0].as_f64().unwrap() - 0.5).abs() < 5e-3);
    assert!((energies[1].as_f64().unwrap() - 1.5).abs() < 2e-2);
}

#[test]
fn oracle_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--preset",
        "vanhove",
        "--out",
        out_dir.to_str().unwrap(),
        "oracle",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out_dir, "oracle.json")).unwrap();
    // truncation-limited agreement; tightness is covered by unit tests
    assert!(report["max_abs_e_diff"].as_f64().unwrap() < 1e-5);
    assert!(report["max_abs_n_diff"].as_f64().unwrap() < 1e-3);
}

#[test]
fn sweep_cache_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let args = [
        "--preset",
        "vanhove",
        "--out",
        out_dir.to_str().unwrap(),
        "sweep",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let csv1 = read(&out_dir, "sweep.csv");
    let json1 = read(&out_dir, "summary.json");
    assert!(out_dir.join("cache").read_dir().unwrap().next().is_some());

    let second = run(&args);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(csv1, read(&out_dir, "sweep.csv"), "CSV changed on cache hit");
    assert_eq!(json1, read(&out_dir, "summary.json"), "JSON changed on cache hit");
}

#[test]
fn no_cache_flag_skips_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--preset",
        "vanhove",
        "--no-cache",
        "--out",
        out_dir.to_str().unwrap(),
        "sweep",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!out_dir.join("cache").exists());
}

#[test]
fn q_zero_sweep_has_zero_number_column_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("q0.toml");
    std::fs::write(
        &cfg_path,
        r#"
q = 0.0
kappas = [0.2, 0.1]
levels = 1
frozen = true
n_max = 2
total_max = 2
shells_per_decade = 6

[grid]
dimension = 1
half_extent = 6.0
points = 41

[potential]
kind = "harmonic"
omega0 = 1.0
declared_class = "C1"
c1 = 2.0
c2 = 0.0
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "sweep",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(read(&out_dir, "sweep.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let n: f64 = cols[2].parse().unwrap();
        assert!(n.abs() < 1e-10, "nonzero <N> at q=0: {line}");
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&read(&out_dir, "summary.json")).unwrap();
    assert!(summary["report"]["slope"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn verify_emits_passing_battery() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "--preset",
        "harmonic_c1",
        "--out",
        out_dir.to_str().unwrap(),
        "verify",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] number_identity"));
    assert!(!stdout.contains("[FAIL]"), "stdout: {stdout}");
    let report: serde_json::Value =
        serde_json::from_slice(&read(&out_dir, "verify.json")).unwrap();
    assert!(report["checks"].as_array().unwrap().len() >= 5);
}
