#![no_main]

use arrayopt_core::array_factor::{decode_afmap, encode_afmap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(af) = decode_afmap(data) {
        let bytes = encode_afmap(&af);
        assert_eq!(decode_afmap(&bytes).expect("re-decode"), af);
    }
});
