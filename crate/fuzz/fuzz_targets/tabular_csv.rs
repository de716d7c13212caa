#![no_main]

use abohb::sim::{Benchmark, LookupRule, TabularBenchmark};
use abohb::space::{ConfigSpace, Hyperparameter, Scale};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let space = ConfigSpace::new(vec![
        Hyperparameter::categorical("op", &["none", "skip", "conv"]),
        Hyperparameter::integer("width", 1, 8, Scale::Linear),
        Hyperparameter::continuous("lr", 1e-4, 1.0, Scale::Log),
    ])
    .unwrap();
    let Ok(table) = TabularBenchmark::from_reader(data, space.clone(), 3, LookupRule::Nearest) else { return };
    assert!(!table.is_empty());
    let keys: Vec<String> = table.keys().map(str::to_string).collect();
    for key in keys {
        let c = space.parse_key(&key).expect("stored keys parse");
        let curve = table.curve(&c, 3).expect("complete curve");
        assert_eq!(curve.len(), 3);
        assert!(curve.iter().all(|e| e.metric.is_finite() && e.seconds >= 0.0));
    }
});
