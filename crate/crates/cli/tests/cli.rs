use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn codesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codesign")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p
}

const SHORT_JUMP: &str = r#"{ "optimizer": { "lambda": 8, "generations": 4, "morphology_generations": 3 } }"#;

#[test]
fn unknown_task_fails_without_writing_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--task", "fly", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fly"));
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_and_encoder_are_usage_errors() {
    assert_eq!(codesign(&["teleport"]).status.code(), Some(2));
    assert_eq!(codesign(&["optimize", "--task", "jump", "--encoder", "octree"]).status.code(), Some(2));
}

#[test]
fn schema_violation_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "optimizer": { "lamda": 50 } }"#);
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--task", "jump", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));
    assert!(!out.exists());
}

#[test]
fn invalid_value_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "optimizer": { "sigma0": -1.0 } }"#);
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--task", "jump", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn missing_task_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn match_material_writes_a_fifty_by_fifty_pgm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "optimizer": { "generations": 3, "lambda": 10 } }"#);
    let out = tmp.path().join("run");
    let o = codesign(&["match-material", "--target", "cross", "--basis-per-axis", "4", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = fs::read(out.join("labels.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n50 50\n"));
    let loss = fs::read_to_string(out.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 4);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["param_count"], 32);
    let m = summary["mismatch_fraction"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&m));
}

#[test]
fn manifest_lists_every_artifact_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT_JUMP);
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--task", "jump", "--seed", "7", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["seed"], 7);
    let names: Vec<&str> = manifest["artifacts"].as_array().unwrap().iter().map(|a| a["path"].as_str().unwrap()).collect();
    assert_eq!(names, ["config.json", "loss.csv", "best_design.json", "trajectory.csv", "summary.json"]);
    let config_bytes = fs::read(out.join("config.json")).unwrap();
    use sha2::Digest;
    assert_eq!(manifest["config_sha256"], hex::encode(sha2::Sha256::digest(&config_bytes)));
}

#[test]
fn optimize_is_deterministic_and_worker_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT_JUMP);
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let o = codesign(&[
            "optimize", "--task", "jump", "--seed", "7", "--workers", workers, "--config", path_str(&cfg), "--out", path_str(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        csvs.push((fs::read(out.join("loss.csv")).unwrap(), fs::read(out.join("trajectory.csv")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn rerunning_the_saved_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT_JUMP);
    let first = tmp.path().join("first");
    let o = codesign(&["optimize", "--task", "jump", "--encoder", "voxel", "--seed", "3", "--config", path_str(&cfg), "--out", path_str(&first)]);
    assert!(o.status.success());
    // The saved config carries task, encoder, simulator and seed.
    let second = tmp.path().join("second");
    let saved = first.join("config.json");
    let o = codesign(&["optimize", "--config", path_str(&saved), "--out", path_str(&second)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["loss.csv", "trajectory.csv", "best_design.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn replay_reproduces_the_recorded_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SHORT_JUMP);
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--task", "jump", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success());
    let replayed = tmp.path().join("replay");
    let o = codesign(&["replay", "--design", path_str(&out.join("best_design.json")), "--out", path_str(&replayed)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(replayed.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["loss"], summary["recorded_loss"]);
    assert_eq!(fs::read(out.join("trajectory.csv")).unwrap(), fs::read(replayed.join("trajectory.csv")).unwrap());
}

#[test]
fn replay_of_a_malformed_design_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let design = tmp.path().join("design.json");
    fs::write(&design, "{ \"vector\": [0.1, ").unwrap();
    let out = tmp.path().join("run");
    let o = codesign(&["replay", "--design", path_str(&design), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let cfg = codesign::experiment::ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        count += 1;
    }
    assert!(count >= 4);
}

#[test]
fn quick_config_runs_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick_jump.json");
    let out = tmp.path().join("run");
    let o = codesign(&["optimize", "--config", path_str(&cfg), "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("loss.csv")).unwrap().lines().count(), 21);
}
