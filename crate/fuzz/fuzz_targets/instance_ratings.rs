#![no_main]

use explicable::formats::read_instance_ratings;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_instance_ratings(text);
    }
});
