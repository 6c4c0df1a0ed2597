#![no_main]
use boundary_gp::io::{curve_csv_string, parse_curve_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((angles, radii)) = parse_curve_csv(text) {
        assert_eq!(angles.len(), radii.len());
        let again = parse_curve_csv(&curve_csv_string(&angles, &radii)).expect("written curve must parse");
        assert_eq!(again.0.len(), angles.len());
    }
});
