#![no_main]

use libfuzzer_sys::fuzz_target;
use salab_core::config::{validate_config, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(cfg) = ExperimentConfig::parse(text) else {
        return;
    };
    if let Ok(valid) = validate_config(&cfg) {
        assert!(!valid.alphas.is_empty());
        assert!(valid.alphas.iter().all(|a| a.get() <= valid.alpha_max));
        assert_eq!(valid.drift.dim(), valid.noise.dim());
        assert!(valid.n_chains >= 1 && valid.samples_per_chain >= 1);
    }
});
