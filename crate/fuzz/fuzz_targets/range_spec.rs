#![no_main]

use cavity_trio::config::{parse_bracket, parse_range};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((lo, hi)) = parse_range(text) {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
    }
    if let Ok((lo, hi)) = parse_bracket(text) {
        assert!(lo > 0.0 && hi > lo && hi.is_finite());
    }
});
