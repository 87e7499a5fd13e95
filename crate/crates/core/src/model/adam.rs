use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators for a list of parameter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    /// Zeroed accumulators for groups of the given lengths.
    pub fn new(config: AdamConfig, group_sizes: &[usize]) -> Self {
        Self {
            config,
            first: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: group_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, group: usize) -> &[f64] {
        &self.first[group]
    }

    pub fn second_moment(&self, group: usize) -> &[f64] {
        &self.second[group]
    }
}

/// One bias-corrected Adam update applied in place to every group.
pub fn adam_step(state: &mut AdamState, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
    if params.len() != state.first.len() || grads.len() != state.first.len() {
        return Err(invalid(format!(
            "expected {} parameter groups, got {} parameters and {} gradients",
            state.first.len(),
            params.len(),
            grads.len()
        )));
    }
    for (g, ((p, gr), m)) in params.iter().zip(grads).zip(&state.first).enumerate() {
        if p.len() != m.len() || gr.len() != m.len() {
            return Err(invalid(format!(
                "group {g}: accumulator length {}, parameter length {}, gradient length {}",
                m.len(),
                p.len(),
                gr.len()
            )));
        }
    }

    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        for i in 0..p.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut state = AdamState::new(AdamConfig::default(), &[3, 1]);
        let mut a = vec![1.0, -2.0, 3.0];
        let mut b = vec![0.5];
        for _ in 0..5 {
            adam_step(&mut state, &mut [&mut a, &mut b], &[&[0.0; 3], &[0.0]]).unwrap();
        }
        assert_eq!(a, vec![1.0, -2.0, 3.0]);
        assert_eq!(b, vec![0.5]);
        assert_eq!(state.steps(), 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut state = AdamState::new(AdamConfig::with_learning_rate(0.001), &[1]);
        let mut p = vec![2.0];
        adam_step(&mut state, &mut [&mut p], &[&[5.0]]).unwrap();
        assert!(((2.0 - p[0]) - 0.001).abs() < 1e-9);
    }

    #[test]
    fn three_steps_match_hand_recurrence() {
        // m_t = 0.9 m + 0.1, v_t = 0.999 v + 0.001 with g ≡ 1; the corrected
        // ratio m̂/√v̂ is exactly 1 each step, so p drops by lr/(1 + ε) per step.
        let mut state = AdamState::new(AdamConfig::with_learning_rate(0.01), &[1]);
        let mut p = vec![0.0];
        let mut expected = 0.0;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=3 {
            adam_step(&mut state, &mut [&mut p], &[&[1.0]]).unwrap();
            m = 0.9 * m + 0.1;
            v = 0.999 * v + 0.001;
            let m_hat = m / (1.0 - 0.9f64.powi(t));
            let v_hat = v / (1.0 - 0.999f64.powi(t));
            expected -= 0.01 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!((state.first_moment(0)[0] - m).abs() < 1e-15);
            assert!((state.second_moment(0)[0] - v).abs() < 1e-15);
        }
        assert!((m - 0.271).abs() < 1e-12);
        assert!((v - 0.002_997_001).abs() < 1e-12);
        assert!((p[0] - expected).abs() < 1e-15);
        assert!((p[0] + 0.03).abs() < 1e-8);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut state = AdamState::new(AdamConfig::default(), &[2]);
        let mut p = vec![0.0; 3];
        assert!(adam_step(&mut state, &mut [&mut p], &[&[0.0; 3]]).is_err());
        let mut p = vec![0.0; 2];
        assert!(adam_step(&mut state, &mut [&mut p], &[&[0.0; 1]]).is_err());
        assert!(adam_step(&mut state, &mut [], &[]).is_err());
        assert_eq!(state.steps(), 0);
    }
}
