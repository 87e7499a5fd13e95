use crate::error::{invalid, Result};

/// Cross-entropy of `softmax(logits)` against `label`, with its gradient
/// `softmax(logits) − onehot(label)`. Uses max-subtraction so saturated
/// logits stay finite.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(invalid(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(invalid("logits must be finite"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    let loss = sum.ln() - (logits[label] - max);
    probs[label] -= 1.0;
    Ok((loss, probs))
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate().skip(1) {
        if l > logits[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn uniform_logits_give_ln_10() {
        let (loss, grad) = softmax_cross_entropy(&[0.0; 10], 3).unwrap();
        assert!((loss - std::f64::consts::LN_10).abs() < 1e-12);
        assert!((grad[3] + 0.9).abs() < 1e-12);
        assert!((grad[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn saturated_correct_prediction() {
        let mut logits = [0.0; 10];
        logits[7] = 1e6;
        let (loss, grad) = softmax_cross_entropy(&logits, 7).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let logits: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (_, grad) = softmax_cross_entropy(&logits, 4).unwrap();
        let h = 1e-6;
        for c in 0..10 {
            let mut p = logits.clone();
            let mut m = logits.clone();
            p[c] += h;
            m[c] -= h;
            let fd = (softmax_cross_entropy(&p, 4).unwrap().0
                - softmax_cross_entropy(&m, 4).unwrap().0)
                / (2.0 * h);
            assert!(
                (fd - grad[c]).abs() < 1e-6,
                "class {c}: {fd} vs {}",
                grad[c]
            );
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(softmax_cross_entropy(&[0.0; 10], 10).is_err());
        assert!(softmax_cross_entropy(&[f64::NAN; 10], 0).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[0.0; 10]), 0);
    }
}
