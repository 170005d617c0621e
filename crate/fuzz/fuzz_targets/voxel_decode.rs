#![no_main]

mod common;

use std::sync::OnceLock;

use codesign::tasks::{EncoderKind, TaskEvaluator, TaskKind};
use libfuzzer_sys::fuzz_target;

static ENCODERS: OnceLock<Vec<TaskEvaluator>> = OnceLock::new();

fuzz_target!(|data: &[u8]| {
    let encoders = ENCODERS.get_or_init(|| {
        [TaskKind::Swim, TaskKind::Jump]
            .into_iter()
            .filter_map(|t| TaskEvaluator::default_for(t, EncoderKind::Voxel).ok())
            .collect()
    });
    let Some((&pick, rest)) = data.split_first() else { return };
    let ev = &encoders[pick as usize % encoders.len()];
    let c = common::design_vector(rest, ev.param_count());
    let design = ev.encoder.decode(&c).expect("right-length vectors always decode");
    design.check_invariants().expect("decoded design is consistent");
    assert!(design.morphed_nodes.coords().iter().all(|x| x.is_finite()));
});
