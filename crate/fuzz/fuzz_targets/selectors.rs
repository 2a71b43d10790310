#![no_main]

use bsm_core::design::{Criterion, FovSpec, MixMode, Region};
use bsm_core::geometry::GridSpec;
use bsm_core::scene::wav::SampleFormat;
use bsm_core::scene::SynthSpec;
use bsm_core::SourceDistance;
use libfuzzer_sys::fuzz_target;

// Command-line value parsers; whatever parses must print back to something that parses the same.
fuzz_target!(|text: &str| {
    if let Ok(f) = text.parse::<FovSpec>() {
        let _ = f.to_string().parse::<FovSpec>();
    }
    if let Ok(s) = text.parse::<SynthSpec>() {
        assert_eq!(s.to_string().parse::<SynthSpec>().ok(), Some(s));
    }
    if let Ok(d) = text.parse::<SourceDistance>() {
        assert_eq!(d.to_string().parse::<SourceDistance>().ok(), Some(d));
    }
    if let Ok(g) = text.parse::<GridSpec>() {
        assert_eq!(g.to_string().parse::<GridSpec>().ok(), Some(g));
    }
    let _ = text.parse::<Criterion>();
    let _ = text.parse::<MixMode>();
    let _ = text.parse::<Region>();
    let _ = text.parse::<SampleFormat>();
});
