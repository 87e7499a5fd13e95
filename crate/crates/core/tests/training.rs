use monoidal_core::data::{Dataset, Mnist, NUM_CLASSES};
use monoidal_core::embedding::Image;
use monoidal_core::model::{
    evaluate, mean_loss, softmax_cross_entropy, train, LinearGrad, LinearHead, Method, MlpGrad,
    MlpModel, SplitData, TrainConfig, TrainRun, MLP_HIDDEN,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Class `k` lights up column `k` of an 8×12 image, plus noise.
fn synthetic(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rows, cols) = (8, 12);
    let mut images = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % NUM_CLASSES;
        let px = (0..rows * cols)
            .map(|p| {
                let base = if p % cols == label { 0.8 } else { 0.0 };
                (base + 0.2 * rng.random::<f64>()).min(1.0)
            })
            .collect();
        images.push(Image::new(rows, cols, px).unwrap());
        labels.push(label as u8);
    }
    Dataset::new(images, labels).unwrap()
}

fn data() -> SplitData {
    let mnist = Mnist {
        train: synthetic(600, 1),
        test: synthetic(200, 2),
    };
    SplitData::new(
        &mnist,
        &TrainConfig::new(Method::Mlp, 0).split_spec().unwrap(),
    )
}

fn quick(method: Method, dim: usize, epochs: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(method, dim)
        .with_seed(5)
        .with_epochs(epochs);
    cfg.batch_size = 32;
    cfg.learning_rate = 0.01;
    cfg
}

fn assert_selection_rule(run: &TrainRun) {
    let best = run
        .epochs
        .iter()
        .map(|e| e.validation_accuracy)
        .fold(f64::MIN, f64::max);
    let first_best = run
        .epochs
        .iter()
        .position(|e| e.validation_accuracy == best)
        .unwrap();
    assert_eq!(run.selected_epoch, first_best);
}

#[test]
fn every_arm_learns_the_synthetic_task() {
    let data = data();
    for (method, dim) in [(Method::Monoidal, 8), (Method::Dft, 16), (Method::Mlp, 0)] {
        let run = train(&quick(method, dim, 6), &data).unwrap();
        assert_eq!(run.epochs.len(), 6);
        assert_selection_rule(&run);
        assert!(run.test_accuracy > 0.5, "{method}: {}", run.test_accuracy);
        let first = run.epochs.first().unwrap().train_loss;
        let last = run.epochs.last().unwrap().train_loss;
        assert!(last < first, "{method}: {first} -> {last}");
    }
}

#[test]
fn initial_loss_is_near_uniform_for_every_arm() {
    let data = data();
    for (method, dim) in [(Method::Monoidal, 8), (Method::Dft, 16), (Method::Mlp, 0)] {
        let run = train(&quick(method, dim, 1), &data).unwrap();
        let ln10 = (NUM_CLASSES as f64).ln();
        assert!(
            (run.initial_loss - ln10).abs() <= 0.05 * ln10,
            "{method}: {}",
            run.initial_loss
        );
    }
}

#[test]
fn training_is_bit_reproducible() {
    let data = data();
    for (method, dim) in [(Method::Monoidal, 4), (Method::Dft, 8), (Method::Mlp, 0)] {
        let cfg = quick(method, dim, 2);
        assert_eq!(train(&cfg, &data).unwrap(), train(&cfg, &data).unwrap());
    }
}

#[test]
fn one_epoch_smoke_run_on_a_small_subset() {
    let mnist = Mnist {
        train: synthetic(100, 3),
        test: synthetic(20, 4),
    };
    let data = SplitData::new(
        &mnist,
        &TrainConfig::new(Method::Monoidal, 2).split_spec().unwrap(),
    );
    let mut cfg = TrainConfig::new(Method::Monoidal, 2).with_epochs(1);
    cfg.batch_size = 8;
    let run = train(&cfg, &data).unwrap();
    assert_eq!(run.selected_epoch, 0);
    assert!(run.epochs[0].train_loss < run.initial_loss);
}

#[test]
fn invalid_configurations_are_rejected() {
    let data = data();
    assert!(train(&quick(Method::Monoidal, 7, 1), &data).is_err());
    assert!(train(&quick(Method::Dft, 8, 0), &data).is_err());
    let mut cfg = quick(Method::Dft, 8, 1);
    cfg.validation_fraction = 1.0;
    assert!(cfg.validate().is_err());
}

#[test]
fn evaluate_matches_hand_argmax() {
    // Identity-like head on 10 one-hot inputs; the label table mixes hits
    // and misses, and sample 9 ties between classes 2 and 9.
    let mut weights = vec![0.0; NUM_CLASSES * NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        weights[c * NUM_CLASSES + c] = 1.0;
    }
    weights[2 * NUM_CLASSES + 9] = 1.0;
    let head = LinearHead::from_parts(NUM_CLASSES, weights, vec![0.0; NUM_CLASSES]).unwrap();
    let inputs: Vec<Vec<f64>> = (0..NUM_CLASSES)
        .map(|k| {
            (0..NUM_CLASSES)
                .map(|j| f64::from(u8::from(j == k)))
                .collect()
        })
        .collect();
    let labels = [0, 1, 2, 3, 4, 0, 0, 7, 8, 2];
    let acc = evaluate(&head, inputs.iter().map(Vec::as_slice).zip(labels)).unwrap();
    assert_eq!(acc, 8.0 / 10.0);

    let one = [inputs[3].as_slice()];
    assert_eq!(evaluate(&head, one.iter().copied().zip([3])).unwrap(), 1.0);
    assert_eq!(evaluate(&head, one.iter().copied().zip([4])).unwrap(), 0.0);
    assert!(mean_loss(&head, one.iter().copied().zip([3])).unwrap() < 2.0);
}

#[test]
fn frozen_hidden_layer_with_zero_output_reduces_to_logistic_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs = 12;
    let mut mlp = MlpModel::init_uniform(inputs, &mut rng);
    mlp.w2.iter_mut().for_each(|w| *w = 0.0);
    let x: Vec<f64> = (0..inputs).map(|_| rng.random()).collect();

    let hidden = mlp.hidden(&x);
    let head = LinearHead::from_parts(MLP_HIDDEN, mlp.w2.clone(), mlp.b2.clone()).unwrap();
    assert_eq!(mlp.forward(&x), head.forward(&hidden));

    let mut g = MlpGrad::zeros(inputs);
    mlp.accumulate(&x, 3, &mut g).unwrap();
    // Zero output weights block every gradient into the hidden layer.
    assert!(g.w1.iter().chain(&g.b1).all(|&v| v == 0.0));
    let (_, gl) = softmax_cross_entropy(&head.forward(&hidden), 3).unwrap();
    let mut lg = LinearGrad::zeros(MLP_HIDDEN);
    head.accumulate(&hidden, &gl, &mut lg);
    assert_eq!(g.w2, lg.weights);
    assert_eq!(g.b2, lg.bias);
}
