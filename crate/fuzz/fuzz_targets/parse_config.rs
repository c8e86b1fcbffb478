#![no_main]

use bgk_experiments::{parse_config, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(overrides) = parse_config(text) else { return };
    // resolution may reject values but must not panic
    if let Ok(c) = RunConfig::resolve(&overrides, None) {
        let again = RunConfig::resolve(&parse_config(&c.to_config_text()).unwrap(), None).unwrap();
        assert_eq!(again.to_config_text(), c.to_config_text());
    }
});
