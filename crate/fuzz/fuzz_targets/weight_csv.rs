#![no_main]

use explicable::formats::{read_weight_matrix, write_weight_matrix};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(w) = read_weight_matrix(text) {
            let again =
                read_weight_matrix(&write_weight_matrix(&w)).expect("written matrix parses");
            assert_eq!(again.to_rows(), w.to_rows());
        }
    }
});
