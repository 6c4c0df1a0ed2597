#![no_main]
use boundary_gp::io::{metadata_json, parse_metadata};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(meta) = parse_metadata(text) {
            let _ = metadata_json(&meta);
        }
    }
});
