use rand::Rng;

use crate::data::NUM_CLASSES;
use crate::error::{invalid, Result};

/// `logits = W x + b` with `W` stored row-major as `10 × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    inputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearGrad {
    pub fn zeros(inputs: usize) -> Self {
        Self {
            weights: vec![0.0; NUM_CLASSES * inputs],
            bias: vec![0.0; NUM_CLASSES],
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(&mut self.bias)
            .for_each(|g| *g *= s);
    }
}

/// Samples `n` values uniformly from `[−1/√fan_in, 1/√fan_in]`.
pub(crate) fn uniform_fan_in(rng: &mut impl Rng, n: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..n).map(|_| rng.random_range(-bound..=bound)).collect()
}

impl LinearHead {
    pub fn zeros(inputs: usize) -> Self {
        Self {
            inputs,
            weights: vec![0.0; NUM_CLASSES * inputs],
            bias: vec![0.0; NUM_CLASSES],
        }
    }

    /// Weights uniform in `±1/√inputs`, zero bias.
    pub fn init_uniform(inputs: usize, rng: &mut impl Rng) -> Self {
        Self {
            inputs,
            weights: uniform_fan_in(rng, NUM_CLASSES * inputs, inputs),
            bias: vec![0.0; NUM_CLASSES],
        }
    }

    pub fn from_parts(inputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != NUM_CLASSES * inputs || bias.len() != NUM_CLASSES {
            return Err(invalid("linear head parameter shapes do not match"));
        }
        Ok(Self {
            inputs,
            weights,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn forward(&self, x: &[f64]) -> [f64; NUM_CLASSES] {
        debug_assert_eq!(x.len(), self.inputs);
        let mut out = [0.0; NUM_CLASSES];
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.weights[c * self.inputs..(c + 1) * self.inputs];
            *o = self.bias[c] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
        out
    }

    /// Adds `∂/∂W`, `∂/∂b` for one sample given `∂loss/∂logits`.
    pub fn accumulate(&self, x: &[f64], grad_logits: &[f64], grad: &mut LinearGrad) {
        for (c, &g) in grad_logits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[c] += g;
            let row = &mut grad.weights[c * self.inputs..(c + 1) * self.inputs];
            row.iter_mut().zip(x).for_each(|(w, v)| *w += g * v);
        }
    }

    /// `Wᵀ · grad_logits`, the gradient with respect to the input.
    pub fn input_gradient(&self, grad_logits: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.inputs];
        for (c, &g) in grad_logits.iter().enumerate() {
            let row = &self.weights[c * self.inputs..(c + 1) * self.inputs];
            out.iter_mut().zip(row).for_each(|(o, w)| *o += g * w);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn uniform_init_respects_bound() {
        let head = LinearHead::init_uniform(16, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(head.weights.iter().all(|w| w.abs() <= 0.25));
        assert!(head.bias.iter().all(|&b| b == 0.0));
        assert_eq!(head.weights.len(), 160);
    }

    #[test]
    fn forward_and_input_gradient() {
        let mut w = vec![0.0; 20];
        w[0] = 1.0;
        w[3] = -2.0;
        let mut b = vec![0.0; 10];
        b[9] = 0.5;
        let head = LinearHead::from_parts(2, w, b).unwrap();
        let out = head.forward(&[3.0, 4.0]);
        assert_eq!(out[0], 3.0);
        assert_eq!(out[1], -8.0);
        assert_eq!(out[9], 0.5);
        let mut g = [0.0; 10];
        g[1] = 1.0;
        assert_eq!(head.input_gradient(&g), vec![0.0, -2.0]);
        assert!(LinearHead::from_parts(2, vec![0.0; 19], vec![0.0; 10]).is_err());
    }
}
