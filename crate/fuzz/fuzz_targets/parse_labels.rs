#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(l) = multihntf::data::parse_labels(text) {
            assert_eq!(l.sample_ids.len(), l.matrix.classes().len());
        }
    }
});
