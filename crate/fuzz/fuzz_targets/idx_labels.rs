#![no_main]
use libfuzzer_sys::fuzz_target;
use monoidal_core::data::{encode_idx_labels, parse_idx_labels, NUM_CLASSES};

fuzz_target!(|data: &[u8]| {
    if let Ok(labels) = parse_idx_labels(data) {
        assert!(labels.iter().all(|&l| (l as usize) < NUM_CLASSES));
        assert_eq!(parse_idx_labels(&encode_idx_labels(&labels)).unwrap(), labels);
    }
});
