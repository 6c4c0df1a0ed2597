#![no_main]
use boundary_gp::io::{parse_replications_csv, replications_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = parse_replications_csv(text) {
        let again = parse_replications_csv(&replications_csv_string(&records)).expect("written records must parse");
        assert_eq!(again.len(), records.len());
    }
});
