use rand::Rng;

use super::linear::uniform_fan_in;
use super::loss::softmax_cross_entropy;
use crate::data::NUM_CLASSES;
use crate::error::{invalid, Result};

pub const MLP_HIDDEN: usize = 128;

/// One hidden ReLU layer: `inputs → 128 → 10`.
///
/// `w1` is stored input-major (`w1[j·128 + k]` connects input `j` to hidden
/// unit `k`) so that a sparse input touches contiguous rows; `w2` is
/// row-major `10 × 128`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    inputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGrad {
    pub fn zeros(inputs: usize) -> Self {
        Self {
            w1: vec![0.0; MLP_HIDDEN * inputs],
            b1: vec![0.0; MLP_HIDDEN],
            w2: vec![0.0; NUM_CLASSES * MLP_HIDDEN],
            b2: vec![0.0; NUM_CLASSES],
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
            .for_each(|g| *g *= s);
    }
}

impl MlpModel {
    pub fn init_uniform(inputs: usize, rng: &mut impl Rng) -> Self {
        let w1 = uniform_fan_in(rng, MLP_HIDDEN * inputs, inputs);
        let w2 = uniform_fan_in(rng, NUM_CLASSES * MLP_HIDDEN, MLP_HIDDEN);
        Self {
            inputs,
            w1,
            b1: vec![0.0; MLP_HIDDEN],
            w2,
            b2: vec![0.0; NUM_CLASSES],
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Post-activation hidden layer.
    pub fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.b1.clone();
        // Column-wise accumulation skips zero inputs (most MNIST pixels).
        for (&v, col) in x.iter().zip(self.w1.chunks_exact(MLP_HIDDEN)) {
            if v == 0.0 {
                continue;
            }
            h.iter_mut().zip(col).for_each(|(hk, w)| *hk += w * v);
        }
        h.iter_mut().for_each(|a| *a = a.max(0.0));
        h
    }

    fn output(&self, h: &[f64]) -> [f64; NUM_CLASSES] {
        let mut out = [0.0; NUM_CLASSES];
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.w2[c * MLP_HIDDEN..(c + 1) * MLP_HIDDEN];
            *o = self.b2[c] + row.iter().zip(h).map(|(w, a)| w * a).sum::<f64>();
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        self.output(&self.hidden(x))
    }

    /// Adds this sample's gradient to `grad` and returns its loss.
    pub fn accumulate(&self, x: &[f64], label: usize, grad: &mut MlpGrad) -> Result<f64> {
        if x.len() != self.inputs {
            return Err(invalid(format!(
                "input length {} does not match {}",
                x.len(),
                self.inputs
            )));
        }
        let h = self.hidden(x);
        let logits = self.output(&h);
        let (loss, g) = softmax_cross_entropy(&logits, label)?;

        let mut gh = vec![0.0; MLP_HIDDEN];
        for (c, &gc) in g.iter().enumerate() {
            grad.b2[c] += gc;
            let row = &self.w2[c * MLP_HIDDEN..(c + 1) * MLP_HIDDEN];
            let grow = &mut grad.w2[c * MLP_HIDDEN..(c + 1) * MLP_HIDDEN];
            for k in 0..MLP_HIDDEN {
                grow[k] += gc * h[k];
                gh[k] += gc * row[k];
            }
        }
        for (k, ghk) in gh.iter_mut().enumerate() {
            if h[k] <= 0.0 {
                *ghk = 0.0;
            }
        }
        grad.b1.iter_mut().zip(&gh).for_each(|(b, g)| *b += g);
        for (&v, gcol) in x.iter().zip(grad.w1.chunks_exact_mut(MLP_HIDDEN)) {
            if v == 0.0 {
                continue;
            }
            gcol.iter_mut().zip(&gh).for_each(|(g, d)| *g += d * v);
        }
        Ok(loss)
    }
}
