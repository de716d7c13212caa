#![no_main]

use abohb::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

// Parsing and the checks that need no file access.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_json_str(text) else { return };
    let _ = cfg.seeds();
    if let Ok(plans) = cfg.plans() {
        for p in &plans {
            let _ = cfg.geometry.build(p.single_rung);
        }
    }
    let _ = cfg.searcher.validate();
    let _ = cfg.simulation_config(0).validate();
});
