#![no_main]

use libfuzzer_sys::fuzz_target;
use noma_secrecy::persist::Model;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = Model::decode(text) {
        let encoded = m.encode();
        let back = Model::decode(&encoded).expect("decode of encode");
        assert_eq!(back.encode(), encoded);
    }
});
