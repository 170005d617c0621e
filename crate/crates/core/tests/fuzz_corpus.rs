//! Replays the checked-in fuzz seeds through the same checks the fuzz targets make.

use std::fs;
use std::path::PathBuf;

use codesign::experiment::{replay, ExperimentConfig};
use codesign::io::{parse_design_file, parse_pgm};
use codesign::tasks::{EncoderKind, TaskEvaluator, TaskKind};

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds for {target}");
    files.into_iter().map(|p| (p.display().to_string(), fs::read(&p).unwrap())).collect()
}

#[test]
fn config_seeds_parse_or_fail_cleanly() {
    let mut accepted = 0;
    for (name, bytes) in corpus("config_json") {
        let text = String::from_utf8(bytes).unwrap();
        if let Ok(cfg) = ExperimentConfig::from_json(&text) {
            let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
            assert_eq!(back, cfg, "{name}");
            accepted += 1;
        }
    }
    assert!(accepted >= 1);
}

#[test]
fn design_seeds_replay() {
    let mut replayed = 0;
    for (name, bytes) in corpus("design_file") {
        let Ok(design) = parse_design_file(std::str::from_utf8(&bytes).unwrap()) else { continue };
        let (evaluation, _) = replay(&design).unwrap();
        assert_eq!(Some(evaluation.loss), design.loss, "{name}");
        replayed += 1;
    }
    assert!(replayed >= 3);
}

#[test]
fn pgm_seeds_round_trip() {
    for (name, bytes) in corpus("pgm") {
        if let Ok(pgm) = parse_pgm(&bytes) {
            let again = parse_pgm(&pgm.to_bytes()).unwrap();
            assert_eq!(again.to_label_grid(), pgm.to_label_grid(), "{name}");
        }
    }
}

fn design_vector(data: &[u8], len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    v.resize(len, 0.0);
    v
}

fn decode_seeds(target: &str, kind: EncoderKind) {
    let evaluators: Vec<TaskEvaluator> =
        [TaskKind::Swim, TaskKind::Jump].into_iter().filter_map(|t| TaskEvaluator::default_for(t, kind).ok()).collect();
    for (name, bytes) in corpus(target) {
        let Some((&pick, rest)) = bytes.split_first() else { continue };
        let ev = &evaluators[pick as usize % evaluators.len()];
        let design = ev.encoder.decode(&design_vector(rest, ev.param_count())).unwrap();
        design.check_invariants().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(design.morphed_nodes.coords().iter().all(|x| x.is_finite()), "{name}");
    }
}

#[test]
fn basis_decode_seeds() {
    decode_seeds("basis_decode", EncoderKind::Basis);
}

#[test]
fn neural_decode_seeds() {
    decode_seeds("neural_decode", EncoderKind::Neural);
}

#[test]
fn voxel_decode_seeds() {
    decode_seeds("voxel_decode", EncoderKind::Voxel);
}
