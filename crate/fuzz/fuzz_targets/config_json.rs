#![no_main]

use codesign::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json(text) {
        // Accepted configs must re-serialize to something that parses back equal.
        let again = serde_json::to_string(&cfg).expect("config serializes");
        let back = ExperimentConfig::from_json(&again).expect("round trip parses");
        assert_eq!(back, cfg);
    }
});
