#![no_main]

use libfuzzer_sys::fuzz_target;
use lame::parse::parse_labels;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(ls) = parse_labels(s) {
        assert!(!ls.is_empty());
        let text = ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(parse_labels(&text).unwrap(), ls);
    }
});
