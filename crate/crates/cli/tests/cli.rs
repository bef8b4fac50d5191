use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn escape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_escape"))
        .args(args)
        .env_remove("ESCAPE_SEED")
        .env_remove("ESCAPE_THREADS")
        .output()
        .expect("binary runs")
}

fn files(dir: &Path, suffix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    v.sort();
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn systole_of_a_small_basis() {
    let o = escape(&["systole", "--matrix", r#"[["4","1/12"],["0","1/4"]]"#]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["delta_sq"], "5/72");
}

#[test]
fn singular_matrix_is_a_config_error() {
    let o = escape(&["systole", "--matrix", r#"[["1","2"],["2","4"]]"#]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constants_print_json() {
    let o = escape(&["constants", "--p", "2", "--precision", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["K"], 49);
    assert!(v["epsilon_p"]["lower"].is_string());
}

#[test]
fn record_sequence_table() {
    let o = escape(&["sequences", "--kind", "record", "--j-max", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = escape(&[
        "experiment",
        "--name",
        "heavy_records",
        "--set",
        "trails=3",
        "-o",
        d,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trails"), "{}", stderr(&o));
    assert!(files(dir.path(), ".json").is_empty());

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"name": "cesaro", "thresholds": {"tol": 1}}"#).unwrap();
    let o = escape(&["experiment", "--config", cfg.to_str().unwrap(), "-o", d]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("thresholds.tol"), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(escape(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn overrides_reach_the_manifest_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = escape(&[
        "experiment",
        "--name",
        "heavy_records",
        "--set",
        "trials=10",
        "--set",
        "n_grid=[100, 1000]",
        "-o",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifests = files(dir.path(), ".manifest.json");
    assert_eq!(manifests.len(), 1);
    let m: Value = serde_json::from_str(&fs::read_to_string(&manifests[0]).unwrap()).unwrap();
    assert_eq!(m["config"]["trials"], 10);
    assert_eq!(m["command"], "experiment");
    let name = manifests[0].file_name().unwrap().to_string_lossy();
    assert!(name.starts_with("heavy_records-seed1-"), "{name}");
    assert!(name.contains(&m["config_sha256"].as_str().unwrap()[..16]));
    // trials are stored, so there is a CSV next to the report
    let csv = files(dir.path(), ".csv");
    assert_eq!(csv.len(), 1);
    assert_eq!(fs::read_to_string(&csv[0]).unwrap().lines().count(), 11);
    assert_eq!(
        m["files"]["csv"],
        csv[0].file_name().unwrap().to_str().unwrap()
    );
}

#[test]
fn reports_without_series_have_no_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = escape(&[
        "experiment",
        "--name",
        "simple_records",
        "--set",
        "trials=50",
        "-o",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(files(dir.path(), ".csv").is_empty());
    assert_eq!(files(dir.path(), ".manifest.json").len(), 1);
}

#[test]
fn same_run_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let o = escape(&[
            "experiment",
            "--name",
            "heavy_records",
            "--set",
            "trials=20",
            "-o",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let fa = files(a.path(), "");
    let fb = files(b.path(), "");
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn env_seed_is_overridden_by_set() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_escape"))
        .args([
            "experiment",
            "--name",
            "heavy_records",
            "--set",
            "trials=5",
            "-o",
            dir.path().to_str().unwrap(),
        ])
        .env("ESCAPE_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(files(dir.path(), ".manifest.json").len(), 1);
    let name = files(dir.path(), ".manifest.json")[0]
        .file_name()
        .unwrap()
        .to_string_lossy()
        .into_owned();
    assert!(name.starts_with("heavy_records-seed77-"), "{name}");

    let o = Command::new(env!("CARGO_BIN_EXE_escape"))
        .args([
            "experiment",
            "--name",
            "heavy_records",
            "--set",
            "trials=5",
            "--set",
            "master_seed=5",
            "-o",
            dir.path().to_str().unwrap(),
        ])
        .env("ESCAPE_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(files(dir.path(), ".manifest.json")
        .iter()
        .any(|p| p.to_string_lossy().contains("heavy_records-seed5-")));
}

#[test]
fn unwritable_output_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("occupied");
    fs::write(&blocker, "not a directory").unwrap();
    let target = blocker.join("reports");
    let o = escape(&[
        "experiment",
        "--name",
        "heavy_records",
        "--set",
        "trials=5",
        "-o",
        target.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains("i/o error") && err.contains("occupied"),
        "{err}"
    );
}

#[test]
fn refusal_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = escape(&[
        "experiment",
        "--name",
        "cesaro",
        "--set",
        "epsilon_mode=paper_faithful",
        "--set",
        "p_prime=0.45",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("refused"));
}

#[test]
fn exact_walk_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = escape(&[
        "walk",
        "--n",
        "12",
        "--seed",
        "3",
        "--both-orders",
        "-o",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["steps"], 12);
    assert_eq!(v["certificate_violations"].as_array().unwrap().len(), 0);
    let csv = files(dir.path(), ".csv");
    assert_eq!(csv.len(), 1);
    assert_eq!(fs::read_to_string(&csv[0]).unwrap().lines().count(), 13);
}
