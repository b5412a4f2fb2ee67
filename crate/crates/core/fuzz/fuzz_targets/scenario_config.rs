#![no_main]
use irs_secrecy::ScenarioConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ScenarioConfig::from_json_str(s) {
        let again = ScenarioConfig::from_json_str(&cfg.to_json_string()).expect("accepted config re-parses");
        assert_eq!(again, cfg);
    }
});
