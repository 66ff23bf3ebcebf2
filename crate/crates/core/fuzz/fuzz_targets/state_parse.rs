#![no_main]

use disttrace::state::{parse_state, PartySpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_state(text);
    if let Some((&k, rest)) = data.split_first() {
        if let Ok(rest) = std::str::from_utf8(rest) {
            let _ = PartySpec::parse(2 + (k as usize & 3), 1 + (k as usize >> 2 & 1), rest);
        }
    }
});
