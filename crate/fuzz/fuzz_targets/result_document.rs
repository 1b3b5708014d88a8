#![no_main]

use libfuzzer_sys::fuzz_target;
use prp_core::io::ResultDocument;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // anything that parses and validates must survive a round trip
    if let Ok(doc) = ResultDocument::from_json(text) {
        if let Ok(json) = doc.to_json() {
            assert_eq!(ResultDocument::from_json(&json).unwrap(), doc);
        }
    }
});
