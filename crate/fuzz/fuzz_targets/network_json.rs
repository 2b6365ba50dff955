#![no_main]

use libfuzzer_sys::fuzz_target;
use netbell::network::Network;

// Anything that parses must survive a round trip unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(value) = Network::from_json(text) {
        let again = Network::from_json(&value.to_json()).expect("re-parse");
        assert_eq!(again.to_json(), value.to_json());
    }
});
