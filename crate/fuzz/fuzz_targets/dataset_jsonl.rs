#![no_main]

use arrayopt_core::dataset::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = Dataset::read_jsonl(data) {
        let mut out = Vec::new();
        ds.write_jsonl(&mut out).expect("write");
        assert_eq!(Dataset::read_jsonl(out.as_slice()).expect("re-read"), ds);
    }
});
