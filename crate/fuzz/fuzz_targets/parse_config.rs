#![no_main]

use cavity_chain::config::{parse_config, serialize};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(run) = parse_config(text) {
        let again = parse_config(&serialize(&run)).expect("serialized config parses");
        assert_eq!(again, run);
    }
});
