use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 7

[synth]
n_buildings = 3000
n_block_groups = 60

[synth.propensity_weights]
median_income = 1.2
pct_minority = -1.2

[train.gbdt]
n_trees = 40
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_propensity"));
    c.env("PROPENSITY_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstderr: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn pipeline(dir: &Path, out: &str) -> PathBuf {
    let cfg = config(dir, SMALL);
    let out = dir.join(out);
    ok(&run(&["pipeline", "--config", path(&cfg), "--out", path(&out)]));
    out
}

#[test]
fn pipeline_writes_every_artifact_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = pipeline(dir.path(), "out");
    for f in [
        "data/buildings.csv",
        "data/complaints.csv",
        "data/violations.csv",
        "data/blockgroups.csv",
        "data/truth.json",
        "ingest.json",
        "rejects.csv",
        "rates.csv",
        "model.json",
        "metrics.json",
        "classified.csv",
        "summary.json",
        "surface_under_reporting.csv",
        "hotspots_under_reporting.geojson",
        "ttests.csv",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let names: Vec<&str> = manifest["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["synth", "ingest", "train", "classify", "hotspot", "compare"]);
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let metrics: Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["config_hash"], manifest["config_hash"]);
    let ttests = fs::read_to_string(out.join("ttests.csv")).unwrap();
    assert_eq!(ttests.lines().count(), 14, "header plus 13 attributes");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = pipeline(dir.path(), "a");
    let b = pipeline(dir.path(), "b");
    for f in ["classified.csv", "ttests.csv", "model.json", "metrics.json", "hotspots_under_reporting.geojson"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn separate_commands_reproduce_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let whole = pipeline(dir.path(), "whole");
    let cfg = config(dir.path(), SMALL);
    let c = path(&cfg);
    let out = dir.path().join("steps");
    let o = path(&out);
    let data = out.join("data");
    ok(&run(&["synth", "--config", c, "--out", path(&data)]));
    ok(&run(&["train", "--config", c, "--out", o]));
    ok(&run(&["classify", "--config", c, "--out", o]));
    ok(&run(&["hotspot", "--config", c, "--out", o]));
    ok(&run(&["compare", "--config", c, "--out", o]));
    for f in [
        "data/buildings.csv",
        "model.json",
        "classified.csv",
        "summary.json",
        "surface_under_reporting.csv",
        "ttests.csv",
    ] {
        assert_eq!(fs::read(whole.join(f)).unwrap(), fs::read(out.join(f)).unwrap(), "{f} differs");
    }
    for cmd in ["train", "classify", "hotspot", "compare"] {
        assert!(out.join(format!("{cmd}.run.json")).is_file());
    }
}

#[test]
fn different_seeds_give_different_models() {
    let dir = tempfile::tempdir().unwrap();
    let a = pipeline(dir.path(), "a");
    let cfg = config(dir.path(), SMALL);
    let b = dir.path().join("b");
    ok(&run(&["pipeline", "--config", path(&cfg), "--out", path(&b), "--seed", "8"]));
    assert_ne!(fs::read(a.join("model.json")).unwrap(), fs::read(b.join("model.json")).unwrap());
}

#[test]
fn single_class_labels_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let data = dir.path().join("data");
    ok(&run(&["synth", "--config", path(&cfg), "--out", path(&data)]));
    fs::write(data.join("violations.csv"), "bbl,timestamp\n").unwrap();
    let o = run(&["train", "--data", path(&data), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate_labels"));
}

#[test]
fn usage_errors_exit_with_code_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["pipeline", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let missing = dir.path().join("nothing-here");
    let o = run(&["train", "--data", path(&missing), "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let bad = config(dir.path(), "sed = 1\n");
    assert_eq!(run(&["pipeline", "--config", path(&bad)]).status.code(), Some(1));
    let o = run(&["pipeline", "--threshold-objective", "median", "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["classify", "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1), "missing model file");
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_data_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let data = dir.path().join("data");
    ok(&run(&["synth", "--config", path(&cfg), "--out", path(&data)]));
    let text = fs::read_to_string(data.join("buildings.csv")).unwrap();
    let header = text.lines().next().unwrap().replacen("bbl", "lot", 1);
    let rest: Vec<&str> = text.lines().skip(1).collect();
    fs::write(data.join("buildings.csv"), format!("{header}\n{}\n", rest.join("\n"))).unwrap();
    let o = run(&["train", "--data", path(&data), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn shipped_configs_run_from_their_directory() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/null.toml");
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--config", path(&shipped), "--out", path(dir.path()), "--buildings", "500"]);
    ok(&o);
    let truth: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["config"]["n_buildings"], 500);
    assert_eq!(truth["config"]["seed"], 2024);
}
