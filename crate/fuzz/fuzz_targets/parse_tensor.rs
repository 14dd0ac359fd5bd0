//! DTF/COO tensor parsing. Accepted tensors must survive a DTF round trip.
//!
//! A header may declare up to 2^28 entries, so run with a raised limit:
//! ```bash
//! cargo +nightly fuzz run parse_tensor -- -malloc_limit_mb=4096 -rss_limit_mb=4096
//! ```

#![no_main]
use libfuzzer_sys::fuzz_target;
use multihntf::tensor::text::{parse_tensor, write_dtf};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = parse_tensor(text) {
            let back = parse_tensor(&write_dtf(&t)).expect("written DTF parses");
            assert_eq!(back, t);
        }
    }
});
