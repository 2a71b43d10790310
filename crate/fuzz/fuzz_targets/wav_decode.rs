#![no_main]

use bsm_core::scene::wav::decode_wav;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(audio) = decode_wav(std::io::Cursor::new(data)) {
        let n = audio.len();
        assert!(audio.channels.iter().all(|c| c.len() == n));
    }
});
