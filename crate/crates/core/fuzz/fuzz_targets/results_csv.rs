#![no_main]
use irs_secrecy::experiments::{parse_rows, render_svg, to_csv_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(rows) = parse_rows(s) else { return };
    let text = to_csv_string(&rows).expect("parsed rows serialize");
    assert_eq!(parse_rows(&text).expect("written CSV parses"), rows);
    // Plotting may reject the data but must not panic.
    let _ = render_svg(&rows);
});
