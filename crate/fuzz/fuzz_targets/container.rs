#![no_main]
use libfuzzer_sys::fuzz_target;
use monoidal_core::data::{decode_container, MAX_DECODED_BYTES};

fuzz_target!(|data: &[u8]| {
    if let Ok(out) = decode_container(data) {
        assert!(out.len() as u64 <= MAX_DECODED_BYTES);
    }
});
