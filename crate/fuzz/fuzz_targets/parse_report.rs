//! Fuzzes the run-report parser: arbitrary bytes must either parse into a
//! structurally valid report or fail with a line-numbered error — never
//! panic, hang, or overallocate.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = dcopt_cli::parse_report(text);
    }
});
