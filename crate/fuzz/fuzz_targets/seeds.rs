#![no_main]

use abohb::experiment::parse_seeds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(seeds) = parse_seeds(s) {
        assert!(seeds.len() <= 100_000);
    }
});
