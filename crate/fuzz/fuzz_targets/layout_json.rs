#![no_main]

use arrayopt_core::layout_file::{layout_to_json, parse_layout};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((layout, meta)) = parse_layout(text) {
        // Anything accepted must survive a write/read cycle unchanged.
        let again = parse_layout(&layout_to_json(&layout, meta.clone())).expect("re-parse");
        assert_eq!(again.0, layout);
        assert_eq!(again.1, meta);
    }
});
