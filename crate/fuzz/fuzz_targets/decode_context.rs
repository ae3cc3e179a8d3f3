#![no_main]

use libfuzzer_sys::fuzz_target;
use lame::parse::decode_context;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(ctx) = decode_context(s) {
        assert!(ctx.tau.im > 0.0);
        assert!(ctx.g2.re.is_finite() && ctx.g3.re.is_finite());
    }
});
