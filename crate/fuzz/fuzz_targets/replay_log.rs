#![no_main]

use lesionbench_study::replay_log;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(replay) = replay_log(data) {
        assert!(replay.valid_len <= data.len());
        let again = replay_log(&data[..replay.valid_len]).expect("valid prefix replays");
        assert_eq!(again.state, replay.state);
    }
});
