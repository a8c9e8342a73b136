#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::io::parse_subset_csv;
use lipiso_core::metric::MetricSpace;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let space = MetricSpace::from_reals(&[0.0, 1.0, 2.5, 4.0]).unwrap();
        let _ = parse_subset_csv(s, &space);
    }
});
