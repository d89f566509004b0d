#![no_main]

use arn_core::sim::{parse_event_log, write_event_log};
use arn_core::world::office3;
use arn_harness::replay::summarize;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(events) = parse_event_log(text) else {
        return;
    };
    let written = write_event_log(&events);
    assert_eq!(parse_event_log(&written).unwrap(), events);
    let _ = summarize(&events, &office3());
});
