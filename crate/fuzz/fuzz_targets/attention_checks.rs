#![no_main]

use explicable_cli::server::read_attention_checks;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_attention_checks(text);
    }
});
