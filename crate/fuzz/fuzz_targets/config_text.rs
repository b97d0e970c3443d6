#![no_main]

use libfuzzer_sys::fuzz_target;
use soc::config::{parse_assignments, Preset, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_assignments(text);
    let mut config = RunConfig::preset(Preset::Paper);
    if config.apply_text(text).is_ok() {
        let mut back = RunConfig::preset(Preset::Paper);
        back.apply_text(&config.echo()).expect("echo must parse");
        assert_eq!(back.echo(), config.echo());
    }
});
