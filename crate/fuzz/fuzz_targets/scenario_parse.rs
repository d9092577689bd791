#![no_main]

use libfuzzer_sys::fuzz_target;
use noma_experiments::config::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(sc) = Scenario::parse(text) else { return };
    if sc.validate().is_ok() {
        // a valid scenario must survive its own serialization
        let again = Scenario::parse(&sc.to_toml()).expect("re-parse");
        assert_eq!(sc, again);
    }
});
