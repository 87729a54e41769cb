#![no_main]

use lesionbench::patchio::{read_pgm, write_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(patch) = read_pgm(data) {
        assert_eq!(patch.pixels().len(), patch.width() * patch.height());
        let again = read_pgm(&write_pgm(&patch)).expect("written PGM parses");
        assert_eq!((again.width(), again.height()), (patch.width(), patch.height()));
    }
});
