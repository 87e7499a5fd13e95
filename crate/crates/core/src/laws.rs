//! Executable checks of the algebraic laws and of every analytic gradient.
//!
//! Each suite draws seeded random inputs, measures the largest deviation
//! from the law it probes and compares it against a fixed tolerance. A
//! suite marked `expect_failure` passes only when the deviation exceeds its
//! threshold; it guards the converse direction of a law.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::algebra::{
    check_interchange, compose_axis, AxisAction, AxisOperator, DenseOperator, MonoidalElement,
    RotationAngles,
};
use crate::data::NUM_CLASSES;
use crate::embedding::{
    embed_image, embed_image_columns_first, embed_image_oracle, EmbeddingPlan, Image, ImageEmbedder,
};
use crate::error::Result;
use crate::model::{
    softmax_cross_entropy, LinearHead, MlpGrad, MlpModel, MonoidalGrad, MonoidalModel,
};
use crate::spectral::{build_layout, DftFeaturizer};

pub const ASSOCIATIVITY_TOLERANCE: f64 = 1e-10;
pub const INTERCHANGE_TOLERANCE: f64 = crate::algebra::INTERCHANGE_TOLERANCE;
/// The non-commuting pair must deviate by more than this.
pub const NON_COMMUTING_THRESHOLD: f64 = 1e-6;
pub const POWER_TOLERANCE: f64 = 1e-9;
pub const SEPARABLE_TOLERANCE: f64 = 1e-9;
pub const ENERGY_TOLERANCE: f64 = 1e-8;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
/// Coordinates probed per parameter group.
pub const GRADIENT_COORDINATES: usize = 20;

const FD_STEP: f64 = 1e-5;
const CHECK_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Injection {
    /// Adds an extra interchange probe with a dense orthogonal operator that
    /// does not commute with the block rotations.
    NonCommuting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub inject: Option<Injection>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            inject: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawResult {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub expect_failure: bool,
    pub passed: bool,
}

impl LawResult {
    fn bound(name: impl Into<String>, max_deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_deviation,
            tolerance,
            expect_failure: false,
            passed: max_deviation <= tolerance,
        }
    }

    fn exceeds(name: impl Into<String>, max_deviation: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            max_deviation,
            tolerance: threshold,
            expect_failure: true,
            passed: max_deviation > threshold,
        }
    }
}

impl fmt::Display for LawResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let relation = if self.expect_failure { ">" } else { "<=" };
        write!(
            f,
            "{status} {:<34} max deviation {:.3e} (need {relation} {:.0e})",
            self.name, self.max_deviation, self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LawReport {
    pub results: Vec<LawResult>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LawResult> {
        self.results.iter().filter(|r| !r.passed)
    }
}

impl fmt::Display for LawReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Runs every suite.
pub fn run_all(opts: &CheckOptions) -> Result<LawReport> {
    let samples = opts.samples.max(1);
    let seed = opts.seed;
    let mut results = vec![
        associativity(samples, seed)?,
        interchange_commuting(samples, seed.wrapping_add(1))?,
        interchange_non_commuting(
            samples,
            seed.wrapping_add(2),
            "interchange (non-commuting pair)",
        )?,
        power_homomorphism(samples, seed.wrapping_add(3))?,
        separable_vs_oracle(samples, seed.wrapping_add(4))?,
        energy_preservation(samples, seed.wrapping_add(5))?,
    ];
    if opts.inject == Some(Injection::NonCommuting) {
        results.push(interchange_non_commuting(
            samples,
            seed.wrapping_add(6),
            "interchange (injected non-commuting)",
        )?);
    }
    results.extend(gradient_checks(seed.wrapping_add(7))?);
    Ok(LawReport { results })
}

fn gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn random_operator(rng: &mut impl Rng, dim: usize) -> Result<AxisOperator> {
    AxisOperator::from_angles(
        (0..dim / 2)
            .map(|_| rng.random_range(-10.0..10.0))
            .collect(),
    )
}

fn random_image(rng: &mut impl Rng, rows: usize, cols: usize) -> Result<Image> {
    Image::new(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random::<f64>()).collect(),
    )
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(x ∘ y) ∘ z = x ∘ (y ∘ z)` along each axis of one- and two-axis
/// elements, with the identity mixed in occasionally.
pub fn associativity(samples: usize, seed: u64) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for s in 0..samples {
        let axes = 1 + s % 2;
        let ops_owned: Vec<AxisOperator> = (0..axes)
            .map(|_| random_operator(&mut rng, CHECK_DIM))
            .collect::<Result<_>>()?;
        let ops: Vec<&dyn AxisAction> = ops_owned.iter().map(|o| o as &dyn AxisAction).collect();
        let axis = rng.random_range(0..axes);
        let shared: Vec<u64> = (0..axes).map(|_| rng.random_range(1..=6)).collect();
        let element = |rng: &mut ChaCha8Rng| -> Result<MonoidalElement> {
            if rng.random_ratio(1, 10) {
                return Ok(MonoidalElement::identity(CHECK_DIM, axes));
            }
            let mut extents = shared.clone();
            extents[axis] = rng.random_range(1..=6);
            MonoidalElement::new(gaussian(rng, CHECK_DIM), extents)
        };
        let (x, y, z) = (element(&mut rng)?, element(&mut rng)?, element(&mut rng)?);
        let left = compose_axis(&compose_axis(&x, &y, axis, &ops)?, &z, axis, &ops)?;
        let right = compose_axis(&x, &compose_axis(&y, &z, axis, &ops)?, axis, &ops)?;
        let mut dev = max_abs_diff(left.content(), right.content());
        if left.extents() != right.extents() {
            dev = f64::INFINITY;
        }
        worst = worst.max(dev);
    }
    Ok(LawResult::bound(
        "associativity",
        worst,
        ASSOCIATIVITY_TOLERANCE,
    ))
}

/// Two block-rotation operators over the same partition satisfy interchange.
pub fn interchange_commuting(samples: usize, seed: u64) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let rounds = samples.div_ceil(10);
    for _ in 0..rounds {
        let a = random_operator(&mut rng, CHECK_DIM)?;
        let b = random_operator(&mut rng, CHECK_DIM)?;
        let report = check_interchange(&a, &b, 10, rng.random())?;
        worst = worst.max(if report.extents_match {
            report.max_deviation
        } else {
            f64::INFINITY
        });
    }
    Ok(LawResult::bound(
        "interchange (commuting pair)",
        worst,
        INTERCHANGE_TOLERANCE,
    ))
}

/// A block rotation paired with a generic orthogonal matrix breaks
/// interchange.
pub fn interchange_non_commuting(samples: usize, seed: u64, name: &str) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_operator(&mut rng, CHECK_DIM)?;
    let b = DenseOperator::random_orthogonal(CHECK_DIM, rng.random())?;
    let report = check_interchange(&a, &b, samples, rng.random())?;
    Ok(LawResult::exceeds(
        name,
        report.max_deviation,
        NON_COMMUTING_THRESHOLD,
    ))
}

/// `R^(m+n) v = R^m (R^n v)`, and angle scaling agrees with repeated
/// matrix multiplication.
pub fn power_homomorphism(samples: usize, seed: u64) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let op = random_operator(&mut rng, CHECK_DIM)?;
        let dense = op.to_dense();
        let v = gaussian(&mut rng, CHECK_DIM);
        let m = rng.random_range(0..=40u64);
        let n = rng.random_range(0..=40u64);
        let joint = op.apply_power(m + n, &v)?;
        let split = op.apply_power(m, &op.apply_power(n, &v)?)?;
        let repeated = dense.apply_power(m + n, &v)?;
        worst = worst
            .max(max_abs_diff(&joint, &split))
            .max(max_abs_diff(&joint, &repeated));
    }
    Ok(LawResult::bound(
        "power homomorphism",
        worst,
        POWER_TOLERANCE,
    ))
}

/// The separable embedding in both pass orders and the cached plan agree
/// with the term-by-term double sum.
pub fn separable_vs_oracle(samples: usize, seed: u64) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for s in 0..samples {
        let (rows, cols) = if s == 0 {
            (28, 28)
        } else {
            (rng.random_range(1..=10), rng.random_range(1..=10))
        };
        let op_x = random_operator(&mut rng, CHECK_DIM)?;
        let op_y = random_operator(&mut rng, CHECK_DIM)?;
        let emb = ImageEmbedder::with_basis(
            op_x.angles().clone(),
            op_y.angles().clone(),
            gaussian(&mut rng, CHECK_DIM),
        )?;
        let img = random_image(&mut rng, rows, cols)?;
        let oracle = embed_image_oracle(&emb, &img);
        let planned = EmbeddingPlan::new(&emb, rows, cols).embed(&img)?;
        worst = worst
            .max(max_abs_diff(&oracle, &embed_image(&emb, &img)))
            .max(max_abs_diff(
                &oracle,
                &embed_image_columns_first(&emb, &img),
            ))
            .max(max_abs_diff(&oracle, &planned));
    }
    Ok(LawResult::bound(
        "separable vs oracle embedding",
        worst,
        SEPARABLE_TOLERANCE,
    ))
}

/// The full DFT feature map preserves the squared norm of the image.
pub fn energy_preservation(samples: usize, seed: u64) -> Result<LawResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for s in 0..samples {
        let (rows, cols) = if s == 0 {
            (28, 28)
        } else {
            (rng.random_range(1..=9), rng.random_range(1..=9))
        };
        let img = random_image(&mut rng, rows, cols)?;
        let featurizer = DftFeaturizer::new(Arc::new(build_layout(rows, cols)?));
        let f = featurizer.features(&img)?;
        let energy: f64 = img.pixels().iter().map(|p| p * p).sum();
        let spectral: f64 = f.iter().map(|v| v * v).sum();
        if energy > 0.0 {
            worst = worst.max((spectral - energy).abs() / energy);
        }
    }
    Ok(LawResult::bound(
        "DFT energy preservation",
        worst,
        ENERGY_TOLERANCE,
    ))
}

/// Relative disagreement between an analytic and a numerical derivative.
/// Near-zero pairs are compared on an absolute scale of 1e-6.
fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central-difference check of `GRADIENT_COORDINATES` seeded coordinates of
/// one parameter group. `perturb(idx, delta)` shifts a coordinate and
/// `loss()` evaluates the batch loss at the current parameters.
fn fd_group<M>(
    name: &str,
    model: &mut M,
    analytic: &[f64],
    rng: &mut ChaCha8Rng,
    perturb: impl Fn(&mut M, usize, f64) -> Result<()>,
    loss: impl Fn(&M) -> Result<f64>,
) -> Result<LawResult> {
    let n = analytic.len();
    let mut worst = 0.0f64;
    for _ in 0..GRADIENT_COORDINATES.min(n) {
        let idx = rng.random_range(0..n);
        perturb(model, idx, FD_STEP)?;
        let up = loss(model)?;
        perturb(model, idx, -2.0 * FD_STEP)?;
        let down = loss(model)?;
        perturb(model, idx, FD_STEP)?;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[idx], numeric));
    }
    Ok(LawResult::bound(
        format!("gradient {name}"),
        worst,
        GRADIENT_TOLERANCE,
    ))
}

fn random_batch(rng: &mut ChaCha8Rng, size: usize) -> Result<Vec<(Image, usize)>> {
    (0..size)
        .map(|_| Ok((random_image(rng, 28, 28)?, rng.random_range(0..NUM_CLASSES))))
        .collect()
}

fn jitter(rng: &mut ChaCha8Rng, values: &mut [f64], scale: f64) {
    values
        .iter_mut()
        .for_each(|v| *v += scale * rng.random_range(-1.0..1.0));
}

/// Finite-difference checks for the angles and the head of the monoidal
/// model, and for all four parameter groups of the MLP.
pub fn gradient_checks(seed: u64) -> Result<Vec<LawResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = random_batch(&mut rng, 5)?;
    let mut out = Vec::new();

    let tx = RotationAngles::new(
        (0..CHECK_DIM / 2)
            .map(|_| rng.random_range(0.0..1.0))
            .collect(),
    )?;
    let ty = RotationAngles::new(
        (0..CHECK_DIM / 2)
            .map(|_| rng.random_range(0.0..1.0))
            .collect(),
    )?;
    let mut head = LinearHead::init_uniform(CHECK_DIM, &mut rng);
    // Monoidal features are large sums of pixels; keep the logits moderate.
    head.weights.iter_mut().for_each(|w| *w *= 0.02);
    jitter(&mut rng, &mut head.bias, 0.5);
    let mut mono = MonoidalModel::new(ImageEmbedder::new(tx, ty)?, head, 28, 28)?;
    let mut grad = MonoidalGrad::zeros(CHECK_DIM);
    for (img, label) in &batch {
        mono.accumulate(img, *label, &mut grad)?;
    }
    let mono_loss = |m: &MonoidalModel| -> Result<f64> {
        let mut sum = 0.0;
        for (img, label) in &batch {
            sum += softmax_cross_entropy(&m.logits(img)?, *label)?.0;
        }
        Ok(sum)
    };
    let shift_angle = |axis: usize| {
        move |m: &mut MonoidalModel, idx: usize, delta: f64| -> Result<()> {
            let mut tx = m.embedder().theta_x().as_slice().to_vec();
            let mut ty = m.embedder().theta_y().as_slice().to_vec();
            if axis == 0 {
                tx[idx] += delta;
            } else {
                ty[idx] += delta;
            }
            m.set_angles(&tx, &ty)
        }
    };
    out.push(fd_group(
        "angles x",
        &mut mono,
        &grad.angles.d_theta_x,
        &mut rng,
        shift_angle(0),
        mono_loss,
    )?);
    out.push(fd_group(
        "angles y",
        &mut mono,
        &grad.angles.d_theta_y,
        &mut rng,
        shift_angle(1),
        mono_loss,
    )?);
    out.push(fd_group(
        "head weights",
        &mut mono,
        &grad.head.weights,
        &mut rng,
        |m, i, d| {
            m.head.weights[i] += d;
            Ok(())
        },
        mono_loss,
    )?);
    out.push(fd_group(
        "head bias",
        &mut mono,
        &grad.head.bias,
        &mut rng,
        |m, i, d| {
            m.head.bias[i] += d;
            Ok(())
        },
        mono_loss,
    )?);

    let mut mlp = MlpModel::init_uniform(28 * 28, &mut rng);
    jitter(&mut rng, &mut mlp.b1, 0.1);
    jitter(&mut rng, &mut mlp.b2, 0.5);
    let mut g = MlpGrad::zeros(28 * 28);
    for (img, label) in &batch {
        mlp.accumulate(img.pixels(), *label, &mut g)?;
    }
    let mlp_loss = |m: &MlpModel| -> Result<f64> {
        let mut sum = 0.0;
        for (img, label) in &batch {
            sum += softmax_cross_entropy(&m.forward(img.pixels()), *label)?.0;
        }
        Ok(sum)
    };
    out.push(fd_group(
        "mlp hidden weights",
        &mut mlp,
        &g.w1,
        &mut rng,
        |m, i, d| {
            m.w1[i] += d;
            Ok(())
        },
        mlp_loss,
    )?);
    out.push(fd_group(
        "mlp hidden bias",
        &mut mlp,
        &g.b1,
        &mut rng,
        |m, i, d| {
            m.b1[i] += d;
            Ok(())
        },
        mlp_loss,
    )?);
    out.push(fd_group(
        "mlp output weights",
        &mut mlp,
        &g.w2,
        &mut rng,
        |m, i, d| {
            m.w2[i] += d;
            Ok(())
        },
        mlp_loss,
    )?);
    out.push(fd_group(
        "mlp output bias",
        &mut mlp,
        &g.b2,
        &mut rng,
        |m, i, d| {
            m.b2[i] += d;
            Ok(())
        },
        mlp_loss,
    )?);
    Ok(out)
}
