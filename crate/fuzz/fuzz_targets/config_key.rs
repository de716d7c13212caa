#![no_main]

use abohb::space::{ConfigSpace, Hyperparameter, Scale};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(key) = std::str::from_utf8(data) else { return };
    let space = ConfigSpace::new(vec![
        Hyperparameter::continuous("learning_rate", 1e-6, 1.0, Scale::Log),
        Hyperparameter::integer("batch_size", 8, 128, Scale::Log),
        Hyperparameter::categorical("activation", &["relu", "tanh"]),
    ])
    .unwrap();
    if let Ok(c) = space.parse_key(key) {
        space.validate_config(&c).expect("parsed configs are valid");
        let canonical = space.config_key(&c);
        assert_eq!(space.parse_key(&canonical).expect("canonical key parses"), c);
    }
});
