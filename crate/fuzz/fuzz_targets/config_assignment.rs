#![no_main]

use libfuzzer_sys::fuzz_target;
use soc::config::{Preset, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let mut config = RunConfig::preset(Preset::TestA);
    let before = config.clone();
    if config.apply_assignment(text).is_err() {
        assert_eq!(config, before);
    }
});
