#![no_main]

use disttrace::pauli::PauliHistogram;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(h) = PauliHistogram::from_csv(text) {
        let back = PauliHistogram::from_csv(&h.to_csv()).expect("re-parse");
        assert_eq!(back.counts, h.counts);
    }
});
