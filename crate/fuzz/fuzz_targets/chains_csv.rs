#![no_main]

use kronsample::io::{parse_chains_csv, write_chains_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_chains_csv(text) {
            assert_eq!(parse_chains_csv(&write_chains_csv(&rows)).unwrap(), rows);
        }
    }
});
