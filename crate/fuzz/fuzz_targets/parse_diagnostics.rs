#![no_main]

use bgk_experiments::io::diagnostics_to_string;
use bgk_experiments::parse_diagnostics;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = parse_diagnostics(text) {
        let again = parse_diagnostics(&diagnostics_to_string(&records)).unwrap();
        assert_eq!(again.len(), records.len());
    }
});
