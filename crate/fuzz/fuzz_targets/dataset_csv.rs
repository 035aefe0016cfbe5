#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&shape, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    // small factor dimensions from the first byte
    let (d1, d2) = (1 + (shape & 0x3) as usize, 1 + ((shape >> 2) & 0x3) as usize);
    if let Ok(ys) = kronsample::io::parse_dataset_csv(text, d1, d2) {
        assert!(ys.iter().all(|y| y.len() == d1 * d2 && y.iter().all(|v| v.is_finite())));
        let again = kronsample::io::write_dataset_csv(&ys);
        assert_eq!(kronsample::io::parse_dataset_csv(&again, d1, d2).unwrap(), ys);
    }
});
