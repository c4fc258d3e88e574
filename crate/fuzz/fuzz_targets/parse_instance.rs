//! Fuzzes the instance file parser: arbitrary bytes must either parse into a
//! checksum-valid instance or fail with a structured error — never panic,
//! hang, or overallocate.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = dcopt::load_instance_from_str(text);
    }
});
