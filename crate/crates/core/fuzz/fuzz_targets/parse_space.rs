#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::io::{parse_space, SpaceFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        for format in [SpaceFormat::Auto, SpaceFormat::Coordinates, SpaceFormat::Matrix, SpaceFormat::Json] {
            if let Ok(p) = parse_space(s, format, None) {
                assert!(p.base() < p.len());
            }
        }
    }
});
