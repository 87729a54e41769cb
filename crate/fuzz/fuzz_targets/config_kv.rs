#![no_main]

use lesionbench::gan::GanConfig;
use lesionbench::kv::parse_kv;
use lesionbench::tsne::TsneConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_kv(text);
        let _ = GanConfig::default().apply_kv(text);
        let _ = TsneConfig::default().apply_kv(text);
    }
});
