//! Classifiers, loss, optimizer and training loops.

pub mod adam;
pub mod linear;
pub mod loss;
pub mod mlp;
pub mod monoidal;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use linear::{LinearGrad, LinearHead};
pub use loss::{argmax, softmax_cross_entropy};
pub use mlp::{MlpGrad, MlpModel, MLP_HIDDEN};
pub use monoidal::{MonoidalGrad, MonoidalModel};
pub use train::{
    init_monoidal, train, train_mlp, train_monoidal, train_on_features, EpochMetrics, FeatureSet,
    FeatureSplit, HeadInit, Method, SplitData, TrainConfig, TrainRun,
};

use crate::data::NUM_CLASSES;
use crate::embedding::Image;
use crate::error::Result;

/// Anything that maps one input to ten class scores.
pub trait Classifier {
    type Input: ?Sized;

    fn logits(&self, input: &Self::Input) -> Result<[f64; NUM_CLASSES]>;
}

impl Classifier for LinearHead {
    type Input = [f64];

    fn logits(&self, input: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if input.len() != self.inputs() {
            return Err(crate::error::invalid(format!(
                "expected {} features, got {}",
                self.inputs(),
                input.len()
            )));
        }
        Ok(self.forward(input))
    }
}

impl Classifier for MlpModel {
    type Input = [f64];

    fn logits(&self, input: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if input.len() != self.inputs() {
            return Err(crate::error::invalid(format!(
                "expected {} pixels, got {}",
                self.inputs(),
                input.len()
            )));
        }
        Ok(self.forward(input))
    }
}

impl Classifier for MonoidalModel {
    type Input = Image;

    fn logits(&self, input: &Image) -> Result<[f64; NUM_CLASSES]> {
        MonoidalModel::logits(self, input)
    }
}

/// Fraction of samples whose argmax matches the label. Empty input scores 0.
pub fn evaluate<'a, C>(
    model: &C,
    samples: impl IntoIterator<Item = (&'a C::Input, usize)>,
) -> Result<f64>
where
    C: Classifier + ?Sized,
    C::Input: 'a,
{
    let mut correct = 0usize;
    let mut total = 0usize;
    for (x, label) in samples {
        if argmax(&model.logits(x)?) == label {
            correct += 1;
        }
        total += 1;
    }
    Ok(if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    })
}

/// Mean cross-entropy over `samples`. Empty input gives 0.
pub fn mean_loss<'a, C>(
    model: &C,
    samples: impl IntoIterator<Item = (&'a C::Input, usize)>,
) -> Result<f64>
where
    C: Classifier + ?Sized,
    C::Input: 'a,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, label) in samples {
        sum += softmax_cross_entropy(&model.logits(x)?, label)?.0;
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}
