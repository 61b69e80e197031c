#![no_main]

use explicable::formats::{read_class_ratings, write_class_ratings};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(r) = read_class_ratings(text) {
            assert_eq!(
                read_class_ratings(&write_class_ratings(&r)).expect("written ratings parse"),
                r
            );
        }
    }
});
