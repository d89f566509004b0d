#![no_main]

use arn_core::gateway::{parse_client_message, to_command};
use arn_core::world::office3;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(msg) = parse_client_message(text) else {
        return;
    };
    let json = serde_json::to_string(&msg).unwrap();
    assert_eq!(parse_client_message(&json).unwrap(), msg);
    let _ = to_command(&msg, &office3());
});
