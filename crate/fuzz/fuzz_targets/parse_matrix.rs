#![no_main]

use libfuzzer_sys::fuzz_target;
use salab_core::config::{parse_matrix, Literal};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(lit) = Literal::parse(text) {
        let again = Literal::parse(&lit.to_string()).expect("rendered literal parses");
        assert_eq!(lit, again);
    }
    if let Ok(m) = parse_matrix(text) {
        assert!(m.iter().all(|v| v.is_finite()));
    }
});
