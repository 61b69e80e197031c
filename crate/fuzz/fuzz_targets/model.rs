#![no_main]

use explicable::formats::{read_model, write_model};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = read_model(text) {
            let again = write_model(&read_model(&write_model(&m)).expect("written model parses"));
            assert_eq!(again, write_model(&m));
        }
    }
});
