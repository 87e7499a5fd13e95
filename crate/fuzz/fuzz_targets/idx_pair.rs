#![no_main]
use libfuzzer_sys::fuzz_target;
use monoidal_core::data::{normalize, parse_idx_pair};

// First byte picks where the image file ends and the label file begins.
fuzz_target!(|data: &[u8]| {
    let Some((&cut, rest)) = data.split_first() else {
        return;
    };
    let cut = (cut as usize * rest.len()) / 255;
    let (images, labels) = rest.split_at(cut);
    if let Ok(raw) = parse_idx_pair(images, labels) {
        let ds = normalize(&raw);
        assert_eq!(ds.len(), raw.labels.len());
        assert!(ds.images().iter().all(|im| im.is_normalized()));
    }
});
