#![no_main]

use libfuzzer_sys::fuzz_target;
use salab::figures::{figure_spec, FIGURE_NAMES};

fuzz_target!(|data: &[u8]| {
    let Ok(name) = std::str::from_utf8(data) else {
        return;
    };
    match figure_spec(name) {
        Some(spec) => assert_eq!(spec.name, name),
        None => assert!(!FIGURE_NAMES.contains(&name)),
    }
});
