#![no_main]

use arrayopt_autodiff::weights::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((arch, store)) = decode(data) {
        assert_eq!(encode(arch, &store), data);
    }
});
