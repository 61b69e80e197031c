#![no_main]

use explicable::taxonomy::Taxonomy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = Taxonomy::parse(text) {
            let _ = t.depth(t.root());
        }
    }
});
