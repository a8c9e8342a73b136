#![no_main]
use libfuzzer_sys::fuzz_target;
use lipiso_core::classify::HorizonFamily;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(family) = HorizonFamily::parse_with(s, |_| Ok(vec![0.0, 1.0, 3.0])) {
            let _ = family.sample(5);
        }
    }
});
