#![no_main]

use kronsample::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml_str(text) {
        let back = cfg.to_toml_string().expect("valid config serializes");
        assert_eq!(RunConfig::from_toml_str(&back).unwrap(), cfg);
    }
});
