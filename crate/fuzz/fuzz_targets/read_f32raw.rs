#![no_main]

use lesionbench::patchio::{read_f32raw, read_f32raw_prefix, write_f32raw};
use libfuzzer_sys::fuzz_target;

fn header_len(bytes: &[u8]) -> usize {
    bytes.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1)
}

fuzz_target!(|data: &[u8]| {
    if let Ok((m, used)) = read_f32raw_prefix(data) {
        assert!(used <= data.len());
        assert_eq!(m.data.len(), m.width * m.height);
    }
    if let Ok(m) = read_f32raw(data) {
        let written = write_f32raw(&m);
        assert_eq!(&written[header_len(&written)..], &data[header_len(data)..]);
    }
});
