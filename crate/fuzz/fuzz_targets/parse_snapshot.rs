#![no_main]

use bgk_experiments::parse_snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(snap) = parse_snapshot(text) {
        let again = parse_snapshot(&snap.to_csv()).unwrap();
        assert_eq!(again.to_csv(), snap.to_csv());
    }
});
