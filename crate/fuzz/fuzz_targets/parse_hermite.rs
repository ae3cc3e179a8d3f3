#![no_main]

use libfuzzer_sys::fuzz_target;
use lame::parse::parse_hermite;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(v) = parse_hermite(s) {
        assert!(v.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }
});
