#![no_main]

use disttrace::Circuit;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = Circuit::deserialize(text) {
        // Anything accepted must survive a round trip.
        let again = Circuit::deserialize(&c.serialize()).expect("re-parse");
        assert_eq!(again, c);
    }
});
