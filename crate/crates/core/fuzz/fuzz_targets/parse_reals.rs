#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::io::{format_field_line, parse_field_line, parse_reals};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_reals(s);
        if let Ok(v) = parse_field_line(s, 3) {
            assert_eq!(parse_field_line(&format_field_line(&v), 3).unwrap(), v);
        }
    }
});
