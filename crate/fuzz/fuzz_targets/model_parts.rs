#![no_main]

use arrayopt_core::surrogate::{parse_sidecar, Surrogate};
use libfuzzer_sys::fuzz_target;

// Input layout: sidecar JSON, a NUL byte, then the weight file.
fuzz_target!(|data: &[u8]| {
    let split = data.iter().position(|b| *b == 0).unwrap_or(data.len());
    let Ok(text) = std::str::from_utf8(&data[..split]) else {
        return;
    };
    let Ok(sidecar) = parse_sidecar(text) else {
        return;
    };
    let weights = data.get(split + 1..).unwrap_or(&[]);
    if let Ok(model) = Surrogate::from_parts(weights, &sidecar) {
        assert_eq!(model.encode_weights(), weights);
    }
});
