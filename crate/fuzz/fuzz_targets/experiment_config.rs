#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Config parsing and validation must never panic.
    let _ = epiloc::ExperimentConfig::from_json(text);
});
