#![no_main]

use codesign::io::parse_pgm;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(pgm) = parse_pgm(data) {
        let bytes = pgm.to_bytes();
        let again = parse_pgm(&bytes).expect("written PGM parses");
        assert_eq!(again.to_label_grid(), pgm.to_label_grid());
    }
});
