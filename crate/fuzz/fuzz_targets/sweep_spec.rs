#![no_main]

use arn_core::executive::TrialConfig;
use arn_harness::sweep::SweepSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing validates; expanding a valid spec must not panic.
    if let Ok(spec) = SweepSpec::parse(text) {
        for cell in spec.cells().iter().take(64) {
            let _ = spec.config(cell, spec.seed_base).validate();
        }
    }
    if let Ok(cfg) = serde_json::from_str::<TrialConfig>(text) {
        let _ = cfg.validate();
    }
});
