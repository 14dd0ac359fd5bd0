#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = multihntf::data::parse_matrix_csv(text) {
            assert!(m.nrows() > 0 && m.ncols() > 0);
            assert!(m.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }
});
