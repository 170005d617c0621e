#![no_main]

use codesign::experiment::replay;
use codesign::io::parse_design_file;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(design) = parse_design_file(text) {
        // Short horizons keep each input fast; errors are fine, panics are not.
        let mut design = design;
        design.simulator.n_steps = design.simulator.n_steps.min(20);
        let _ = replay(&design);
    }
});
