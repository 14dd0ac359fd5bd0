//! Chain documents that load must serialize and load back unchanged.

#![no_main]
use libfuzzer_sys::fuzz_target;
use multihntf::LayerChain;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(chain) = LayerChain::from_json(text) {
            let json = chain.to_json().expect("loaded chain serializes");
            assert_eq!(LayerChain::from_json(&json).expect("round trip"), chain);
        }
    }
});
