#![no_main]

use arn_core::world::load_map;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Any accepted map survives a serialize/load round trip unchanged.
    if let Ok(m) = load_map(text) {
        let again = load_map(&m.to_json()).expect("re-serialized map loads");
        assert_eq!(again, m);
        let _ = m.render();
    }
});
