#![no_main]
use boundary_gp::geometry::{Design, PolarImage};
use boundary_gp::io::{image_csv_string, parse_image_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(observations) = parse_image_csv(text) else {
        return;
    };
    let image = PolarImage { observations, design: Design::CompletelyRandom { n: 0 }, seed: 0 };
    let again = parse_image_csv(&image_csv_string(&image)).expect("written image must parse");
    assert_eq!(again.len(), image.observations.len());
});
