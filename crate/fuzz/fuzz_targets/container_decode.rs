#![no_main]

use bsm_core::io::{decode_dataset, encode_dataset, read_manifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_manifest(data);
    if let Ok(d) = decode_dataset(data) {
        let bytes = encode_dataset(&d).expect("decoded datasets re-encode");
        assert_eq!(decode_dataset(&bytes).expect("re-encoded datasets decode"), d);
    }
});
