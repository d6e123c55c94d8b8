#![no_main]

use libfuzzer_sys::fuzz_target;
use salab_core::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything that parses must survive a render and re-parse unchanged.
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&cfg.to_text()).expect("rendered config parses");
        assert_eq!(cfg.to_text(), again.to_text());
    }
});
