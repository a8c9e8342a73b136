#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::classify::Property;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = s.parse::<Property>() {
            let _ = p.to_string().parse::<Property>();
        }
    }
});
