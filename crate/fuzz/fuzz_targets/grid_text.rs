#![no_main]

use bsm_core::geometry::parse_grid_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(grid) = parse_grid_text("fuzz", text) {
        assert!(!grid.is_empty());
    }
});
