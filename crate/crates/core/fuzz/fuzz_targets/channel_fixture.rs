#![no_main]
use irs_secrecy::ChannelSet;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(ch) = ChannelSet::from_json_str(s) {
        let again = ChannelSet::from_json_str(&ch.to_json_string()).expect("accepted fixture re-parses");
        assert_eq!(again.fingerprint(), ch.fingerprint());
    }
});
