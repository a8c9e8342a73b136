#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::io::{parse_field_csv, parse_field_entries};
use lipiso_core::metric::MetricSpace;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let space = MetricSpace::from_reals(&[0.0, 1.0, 2.5, 4.0]).unwrap();
        let _ = parse_field_entries(s, &space);
        if let Ok(f) = parse_field_csv(s, &space) {
            assert_eq!(f.len(), space.len());
        }
    }
});
