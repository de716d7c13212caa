#![no_main]

use abohb::space::{ConfigSpace, FeatureVector};
use libfuzzer_sys::fuzz_target;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(space) = ConfigSpace::from_json_str(text) else { return };
    // a space that parses must serialize back to an equal space
    let again = ConfigSpace::from_json_str(&space.to_json_string()).expect("re-parse");
    assert_eq!(again, space);
    let mut rng = ChaCha8Rng::seed_from_u64(data.len() as u64);
    for _ in 0..4 {
        let c = space.sample_random(&mut rng);
        assert_eq!(space.parse_key(&space.config_key(&c)).expect("own key"), c);
        let f = space.encode(&c).expect("encode");
        assert_eq!(f.0.len(), space.encoded_dim());
        let _ = space.decode(&FeatureVector(f.0));
        let _ = space.perturb(&c, 0.5, &mut rng);
    }
});
