#![no_main]

use explicable_cli::server::decode_rating;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = decode_rating(data) {
        assert!((0..=4).contains(&r.score));
        assert!(!r.rater_id.is_empty() && r.rater_id.len() <= 64);
    }
});
