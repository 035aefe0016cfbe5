#![no_main]

use kronsample::io::{parse_acf_csv, write_acf_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = parse_acf_csv(text) {
            let _ = parse_acf_csv(&write_acf_csv(&table));
        }
    }
});
