#![no_main]
use boundary_gp::io::parse_band_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_band_csv(text);
    }
});
