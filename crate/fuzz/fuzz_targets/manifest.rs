#![no_main]

use affectkit::pipeline::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Manifest::from_json(text, "") {
            // a validated manifest must survive a round trip unchanged
            let again = Manifest::from_json(&m.to_json(), "").expect("re-parse");
            assert_eq!(again, m);
        }
    }
});
