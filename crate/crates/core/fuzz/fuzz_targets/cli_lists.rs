#![no_main]
use irs_secrecy::experiments::{parse_scheme_list, parse_value_list, SweepVariable};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_value_list(s) {
        assert!(!values.is_empty());
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert!(values.iter().all(|v| v.is_finite()));
    }
    if let Ok(schemes) = parse_scheme_list(s) {
        assert!(!schemes.is_empty());
    }
    let _ = s.parse::<SweepVariable>();
});
