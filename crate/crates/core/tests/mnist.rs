//! Checks against the MNIST files shipped in `data/mnist`.

use std::path::PathBuf;

use monoidal_core::data::{load_mnist, SplitSpec, NUM_CLASSES};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

#[test]
fn standard_split_sizes_and_contents() {
    let mnist = load_mnist(data_dir()).unwrap();
    assert_eq!(mnist.train.len(), 60_000);
    assert_eq!(mnist.test.len(), 10_000);
    assert_eq!(&mnist.train.labels()[..5], &[5, 0, 4, 1, 9]);
    assert_eq!(&mnist.test.labels()[..3], &[7, 2, 1]);

    let first = &mnist.train.images()[0];
    assert_eq!((first.rows(), first.cols()), (28, 28));
    assert!(mnist.train.images().iter().all(|im| im.is_normalized()));

    let mut counts = [0usize; NUM_CLASSES];
    mnist
        .train
        .labels()
        .iter()
        .for_each(|&l| counts[l as usize] += 1);
    assert_eq!(
        counts,
        [5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949]
    );

    let mean: f64 = mnist
        .train
        .images()
        .iter()
        .flat_map(|im| im.pixels())
        .sum::<f64>()
        / (60_000.0 * 784.0);
    assert!((mean - 0.1307).abs() < 1e-3, "{mean}");
}

#[test]
fn default_hold_out_matches_test_set_size() {
    let p = SplitSpec::new(0, 1.0 / 6.0).unwrap().partition(60_000);
    assert_eq!((p.train.len(), p.validation.len()), (50_000, 10_000));
}
