//! Run configs in both encodings. The first byte picks JSON or TOML.

#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&mode, rest)) = data.split_first() else {
        return;
    };
    if let Ok(text) = std::str::from_utf8(rest) {
        if let Ok(cfg) = multihntf_cli::config::parse_config(text, mode & 1 == 1) {
            let _ = cfg.validate();
        }
    }
});
