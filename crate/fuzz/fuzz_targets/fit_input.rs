#![no_main]

use libfuzzer_sys::fuzz_target;
use ngnb::input::parse_counts;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(counts) = parse_counts(text) {
            assert!(!counts.is_empty());
        }
    }
});
