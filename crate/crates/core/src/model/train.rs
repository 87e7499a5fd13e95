//! Training loops for the three experiment arms.
//!
//! Every arm uses the same protocol: seeded parameter initialization, Adam on
//! the minibatch-mean cross-entropy, one pass over the shuffled training
//! split per epoch, and selection of the epoch with the highest validation
//! accuracy (earliest on ties). Test accuracy is measured once, on the
//! selected snapshot.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::linear::{LinearGrad, LinearHead};
use super::loss::softmax_cross_entropy;
use super::mlp::{MlpGrad, MlpModel};
use super::monoidal::{MonoidalGrad, MonoidalModel};
use super::{evaluate, mean_loss};
use crate::algebra::{reduce_angle, RotationAngles};
use crate::data::{batches, split, Dataset, Mnist, SplitSpec};
use crate::embedding::ImageEmbedder;
use crate::error::{invalid, Error, Result};
use crate::spectral::{build_layout, DftFeaturizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Monoidal,
    Dft,
    Mlp,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Monoidal => "monoidal",
            Method::Dft => "dft",
            Method::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monoidal" => Ok(Method::Monoidal),
            "dft" => Ok(Method::Dft),
            "mlp" => Ok(Method::Mlp),
            other => Err(invalid(format!("unknown method {other:?}"))),
        }
    }
}

pub const DEFAULT_EPOCHS: usize = 20;
pub const DEFAULT_BATCH_SIZE: usize = 128;
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 1.0 / 6.0;
pub const DEFAULT_SPLIT_SEED: u64 = 20_250_101;
/// Angles start uniform in `[−r, r]`, the low-frequency band.
pub const DEFAULT_ANGLE_INIT_RANGE: f64 = PI / 4.0;

/// How the linear head of the monoidal and DFT arms is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadInit {
    /// Weights uniform in `±1/√fan_in`.
    Uniform,
    /// All weights zero, so the initial prediction is exactly uniform.
    Zero,
}

impl HeadInit {
    fn build(self, inputs: usize, rng: &mut ChaCha8Rng) -> LinearHead {
        match self {
            HeadInit::Uniform => LinearHead::init_uniform(inputs, rng),
            HeadInit::Zero => LinearHead::zeros(inputs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    /// Feature dimension fed to the linear head (ignored by the MLP arm,
    /// which always sees raw pixels).
    pub dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub split_seed: u64,
    pub angle_init_range: f64,
    pub head_init: HeadInit,
}

impl TrainConfig {
    pub fn new(method: Method, dim: usize) -> Self {
        Self {
            method,
            dim,
            epochs: DEFAULT_EPOCHS,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: DEFAULT_LEARNING_RATE,
            seed: 0,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
            split_seed: DEFAULT_SPLIT_SEED,
            angle_init_range: DEFAULT_ANGLE_INIT_RANGE,
            head_init: HeadInit::Zero,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(invalid("validation fraction must lie in (0, 1)"));
        }
        if self.method != Method::Mlp && self.dim == 0 {
            return Err(invalid("feature dimension must be positive"));
        }
        if self.method == Method::Monoidal && self.dim % 2 != 0 {
            return Err(invalid(format!(
                "monoidal embedding dimension must be even, got {}",
                self.dim
            )));
        }
        if !(self.angle_init_range >= 0.0 && self.angle_init_range.is_finite()) {
            return Err(invalid("angle init range must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn split_spec(&self) -> Result<SplitSpec> {
        SplitSpec::new(self.split_seed, self.validation_fraction)
    }

    fn epoch_seed(&self, epoch: usize) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((epoch as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean minibatch loss over the epoch.
    pub train_loss: f64,
    pub validation_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRun {
    pub config: TrainConfig,
    /// Mean training loss of the freshly initialized model.
    pub initial_loss: f64,
    pub epochs: Vec<EpochMetrics>,
    pub selected_epoch: usize,
    pub test_accuracy: f64,
}

/// Train, validation and test samples for one experiment.
#[derive(Debug, Clone)]
pub struct SplitData {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl SplitData {
    pub fn new(mnist: &Mnist, spec: &SplitSpec) -> Self {
        let (train, validation) = split(&mnist.train, spec);
        Self {
            train,
            validation,
            test: mnist.test.clone(),
        }
    }

    fn image_shape(&self) -> Result<(usize, usize)> {
        let first = self
            .train
            .images()
            .first()
            .ok_or_else(|| invalid("training split is empty"))?;
        Ok((first.rows(), first.cols()))
    }
}

/// Fixed-length feature vectors with labels, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    dim: usize,
    values: Vec<f64>,
    labels: Vec<u8>,
}

impl FeatureSet {
    pub fn new(dim: usize, features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(invalid(format!(
                "{} feature vectors but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = features.iter().position(|f| f.len() != dim) {
            return Err(invalid(format!(
                "feature vector {bad} does not have length {dim}"
            )));
        }
        Ok(Self {
            dim,
            values: features.concat(),
            labels,
        })
    }

    /// Applies `featurizer` to every image of `dataset`.
    pub fn from_dataset(dataset: &Dataset, featurizer: &DftFeaturizer) -> Result<Self> {
        let dim = featurizer.layout().len();
        let mut values = Vec::with_capacity(dim * dataset.len());
        for img in dataset.images() {
            values.extend(featurizer.features(img)?);
        }
        Ok(Self {
            dim,
            values,
            labels: dataset.labels().to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn label(&self, idx: usize) -> usize {
        self.labels[idx] as usize
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f64], usize)> {
        (0..self.len()).map(move |i| (self.features(i), self.label(i)))
    }
}

/// Low-frequency DFT features for all three splits.
#[derive(Debug, Clone)]
pub struct FeatureSplit {
    pub train: FeatureSet,
    pub validation: FeatureSet,
    pub test: FeatureSet,
}

impl FeatureSplit {
    /// Keeps the `dim` lowest-frequency features of every image.
    pub fn dft(data: &SplitData, dim: usize) -> Result<Self> {
        let (rows, cols) = data.image_shape()?;
        let layout = build_layout(rows, cols)?.prefix(dim)?;
        let featurizer = DftFeaturizer::new(Arc::new(layout));
        Ok(Self {
            train: FeatureSet::from_dataset(&data.train, &featurizer)?,
            validation: FeatureSet::from_dataset(&data.validation, &featurizer)?,
            test: FeatureSet::from_dataset(&data.test, &featurizer)?,
        })
    }
}

/// Shared epoch loop. `step` applies one minibatch update and returns the
/// batch-mean loss; `validate` scores a snapshot.
fn run_epochs<M: Clone>(
    cfg: &TrainConfig,
    n_train: usize,
    model: &mut M,
    mut step: impl FnMut(&mut M, &[usize]) -> Result<f64>,
    validate: impl Fn(&M) -> Result<f64>,
) -> Result<(M, Vec<EpochMetrics>, usize)> {
    if n_train == 0 {
        return Err(invalid("training split is empty"));
    }
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, M)> = None;
    for epoch in 0..cfg.epochs {
        let order = batches(n_train, cfg.batch_size, cfg.epoch_seed(epoch))?;
        let mut loss_sum = 0.0;
        for batch in &order {
            loss_sum += step(model, batch)?;
        }
        let validation_accuracy = validate(model)?;
        history.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            validation_accuracy,
        });
        if best
            .as_ref()
            .map_or(true, |(acc, _, _)| validation_accuracy > *acc)
        {
            best = Some((validation_accuracy, epoch, model.clone()));
        }
    }
    let (_, selected, snapshot) = best.expect("at least one epoch ran");
    Ok((snapshot, history, selected))
}

fn check_method(cfg: &TrainConfig, expected: Method) -> Result<()> {
    cfg.validate()?;
    if cfg.method != expected {
        return Err(invalid(format!(
            "configuration is for {}, not {expected}",
            cfg.method
        )));
    }
    Ok(())
}

/// Uniform angles in `[−range, range]`, reduced mod 2π.
fn init_angles(rng: &mut ChaCha8Rng, blocks: usize, range: f64) -> Vec<f64> {
    (0..blocks)
        .map(|_| {
            if range == 0.0 {
                0.0
            } else {
                reduce_angle(rng.random_range(-range..=range))
            }
        })
        .collect()
}

/// A seeded monoidal classifier, as used at the start of training.
pub fn init_monoidal(cfg: &TrainConfig, rows: usize, cols: usize) -> Result<MonoidalModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let blocks = cfg.dim / 2;
    let tx = RotationAngles::new(init_angles(&mut rng, blocks, cfg.angle_init_range))?;
    let ty = RotationAngles::new(init_angles(&mut rng, blocks, cfg.angle_init_range))?;
    let head = cfg.head_init.build(cfg.dim, &mut rng);
    MonoidalModel::new(ImageEmbedder::new(tx, ty)?, head, rows, cols)
}

/// Jointly trains the rotation angles and the linear head.
pub fn train_monoidal(cfg: &TrainConfig, data: &SplitData) -> Result<TrainRun> {
    check_method(cfg, Method::Monoidal)?;
    let (rows, cols) = data.image_shape()?;
    let mut model = init_monoidal(cfg, rows, cols)?;
    let initial_loss = mean_loss(&model, dataset_samples(&data.train))?;

    let blocks = cfg.dim / 2;
    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(cfg.learning_rate),
        &[10 * cfg.dim, 10, blocks, blocks],
    );
    let mut theta_x = model.embedder().theta_x().as_slice().to_vec();
    let mut theta_y = model.embedder().theta_y().as_slice().to_vec();

    let step = |model: &mut MonoidalModel, batch: &[usize]| -> Result<f64> {
        let mut grad = MonoidalGrad::zeros(cfg.dim);
        let mut loss = 0.0;
        for &i in batch {
            loss += model.accumulate(&data.train.images()[i], data.train.label(i), &mut grad)?;
        }
        let inv = 1.0 / batch.len() as f64;
        grad.scale(inv);
        let head = &mut model.head;
        adam_step(
            &mut adam,
            &mut [
                &mut head.weights,
                &mut head.bias,
                &mut theta_x,
                &mut theta_y,
            ],
            &[
                &grad.head.weights,
                &grad.head.bias,
                &grad.angles.d_theta_x,
                &grad.angles.d_theta_y,
            ],
        )?;
        theta_x
            .iter_mut()
            .chain(theta_y.iter_mut())
            .for_each(|a| *a = reduce_angle(*a));
        model.set_angles(&theta_x, &theta_y)?;
        Ok(loss * inv)
    };
    let validate = |m: &MonoidalModel| evaluate(m, dataset_samples(&data.validation));
    let (best, epochs, selected_epoch) =
        run_epochs(cfg, data.train.len(), &mut model, step, validate)?;
    Ok(TrainRun {
        config: cfg.clone(),
        initial_loss,
        epochs,
        selected_epoch,
        test_accuracy: evaluate(&best, dataset_samples(&data.test))?,
    })
}

/// Logistic regression on precomputed features.
pub fn train_on_features(cfg: &TrainConfig, features: &FeatureSplit) -> Result<TrainRun> {
    check_method(cfg, Method::Dft)?;
    for set in [&features.train, &features.validation, &features.test] {
        if set.dim() != cfg.dim {
            return Err(invalid(format!(
                "features have dimension {}, configuration asks for {}",
                set.dim(),
                cfg.dim
            )));
        }
    }
    let train = &features.train;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut head = cfg.head_init.build(cfg.dim, &mut rng);
    let initial_loss = mean_loss(&head, train.samples())?;
    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(cfg.learning_rate),
        &[10 * cfg.dim, 10],
    );

    let step = |head: &mut LinearHead, batch: &[usize]| -> Result<f64> {
        let mut grad = LinearGrad::zeros(cfg.dim);
        let mut loss = 0.0;
        for &i in batch {
            let x = train.features(i);
            let (l, g) = softmax_cross_entropy(&head.forward(x), train.label(i))?;
            head.accumulate(x, &g, &mut grad);
            loss += l;
        }
        let inv = 1.0 / batch.len() as f64;
        grad.scale(inv);
        adam_step(
            &mut adam,
            &mut [&mut head.weights, &mut head.bias],
            &[&grad.weights, &grad.bias],
        )?;
        Ok(loss * inv)
    };
    let validate = |h: &LinearHead| evaluate(h, features.validation.samples());
    let (best, epochs, selected_epoch) = run_epochs(cfg, train.len(), &mut head, step, validate)?;
    Ok(TrainRun {
        config: cfg.clone(),
        initial_loss,
        epochs,
        selected_epoch,
        test_accuracy: evaluate(&best, features.test.samples())?,
    })
}

/// One-hidden-layer perceptron on raw pixels.
pub fn train_mlp(cfg: &TrainConfig, data: &SplitData) -> Result<TrainRun> {
    check_method(cfg, Method::Mlp)?;
    let (rows, cols) = data.image_shape()?;
    let inputs = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = MlpModel::init_uniform(inputs, &mut rng);
    let initial_loss = mean_loss(&model, pixel_samples(&data.train))?;
    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(cfg.learning_rate),
        &[
            model.w1.len(),
            model.b1.len(),
            model.w2.len(),
            model.b2.len(),
        ],
    );

    let step = |model: &mut MlpModel, batch: &[usize]| -> Result<f64> {
        let mut grad = MlpGrad::zeros(inputs);
        let mut loss = 0.0;
        for &i in batch {
            loss += model.accumulate(
                data.train.images()[i].pixels(),
                data.train.label(i),
                &mut grad,
            )?;
        }
        let inv = 1.0 / batch.len() as f64;
        grad.scale(inv);
        adam_step(
            &mut adam,
            &mut [&mut model.w1, &mut model.b1, &mut model.w2, &mut model.b2],
            &[&grad.w1, &grad.b1, &grad.w2, &grad.b2],
        )?;
        Ok(loss * inv)
    };
    let validate = |m: &MlpModel| evaluate(m, pixel_samples(&data.validation));
    let (best, epochs, selected_epoch) =
        run_epochs(cfg, data.train.len(), &mut model, step, validate)?;
    Ok(TrainRun {
        config: cfg.clone(),
        initial_loss,
        epochs,
        selected_epoch,
        test_accuracy: evaluate(&best, pixel_samples(&data.test))?,
    })
}

/// Runs whichever arm `cfg.method` names.
pub fn train(cfg: &TrainConfig, data: &SplitData) -> Result<TrainRun> {
    match cfg.method {
        Method::Monoidal => train_monoidal(cfg, data),
        Method::Mlp => train_mlp(cfg, data),
        Method::Dft => {
            cfg.validate()?;
            train_on_features(cfg, &FeatureSplit::dft(data, cfg.dim)?)
        }
    }
}

pub(crate) fn dataset_samples(
    ds: &Dataset,
) -> impl Iterator<Item = (&crate::embedding::Image, usize)> {
    ds.images()
        .iter()
        .zip(ds.labels())
        .map(|(im, &l)| (im, l as usize))
}

pub(crate) fn pixel_samples(ds: &Dataset) -> impl Iterator<Item = (&[f64], usize)> {
    ds.images()
        .iter()
        .zip(ds.labels())
        .map(|(im, &l)| (im.pixels(), l as usize))
}
