#![no_main]

use bsm_core::io::report_csv::{read_direction_csv, read_frequency_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = read_frequency_csv(data);
    let _ = read_direction_csv(data);
});
