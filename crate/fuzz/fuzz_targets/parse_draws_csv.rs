#![no_main]
use boundary_gp::io::parse_draws_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((grid, rows)) = parse_draws_csv(text) {
            assert!(rows.iter().all(|r| r.len() == grid.len()));
        }
    }
});
