#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::io::parse_operator_json;
use lipiso_core::metric::MetricSpace;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let space = MetricSpace::from_reals(&[0.0, 1.0, 2.5]).unwrap();
        if let Ok(op) = parse_operator_json(s, &space, &space) {
            let _ = op.apply_values(&[0.0, -1.0, 2.0]);
            let _ = op.invert().apply_values(&[0.0, -1.0, 2.0]);
        }
    }
});
