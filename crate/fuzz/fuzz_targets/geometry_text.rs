#![no_main]

use bsm_core::geometry::parse_geometry_text;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(g) = parse_geometry_text(text) {
        assert_eq!(g.positions().len(), g.labels().len());
    }
});
