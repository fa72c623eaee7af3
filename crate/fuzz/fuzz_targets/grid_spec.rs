#![no_main]

use cavity_trio::config::parse_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(grid) = parse_grid(text) else {
        return;
    };
    let values = grid.values();
    assert_eq!(values.len(), grid.n);
    assert_eq!(values[0], grid.lo);
    assert_eq!(values[values.len() - 1], grid.hi);
    assert!(values.iter().all(|v| v.is_finite()));
});
