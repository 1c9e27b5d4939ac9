//! Binary logistic regression trained by full-batch gradient descent on the
//! cross-entropy loss, with per-feature z-score standardization fitted on
//! the training split only.

use super::{LabeledDataset, LearnError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// train-split standardization parameters
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub loss_curve: Vec<f64>,
}

impl LogisticModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut z = self.bias;
        for i in 0..x.len() {
            z += self.weights[i] * (x[i] - self.mean[i]) / self.std[i];
        }
        sigmoid(z)
    }

    pub fn scores(&self, ds: &LabeledDataset, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.score(&ds.features[i])).collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn cross_entropy(scores: &[f64], ys: &[u8]) -> f64 {
    let mut loss = 0.0;
    for (&s, &y) in scores.iter().zip(ys) {
        let s = s.clamp(1e-12, 1.0 - 1e-12);
        loss -= if y == 1 { s.ln() } else { (1.0 - s).ln() };
    }
    loss / scores.len() as f64
}

/// Full-batch gradient descent; the step is halved whenever it would
/// increase the loss, so the recorded loss curve is non-increasing.
pub fn train_logistic(
    ds: &LabeledDataset,
    learning_rate: f64,
    epochs: u32,
    seed: u64,
) -> Result<LogisticModel, LearnError> {
    let idx = &ds.train_idx;
    let n = idx.len();
    if n < 2 {
        return Err(LearnError::TooFewRows(2));
    }
    let d = ds.n_features();
    // standardization on the train split only
    let mut mean = vec![0.0; d];
    for &i in idx {
        for j in 0..d {
            mean[j] += ds.features[i][j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut std = vec![0.0; d];
    for &i in idx {
        for j in 0..d {
            let c = ds.features[i][j] - mean[j];
            std[j] += c * c;
        }
    }
    for s in &mut std {
        *s = (*s / n as f64).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let xs: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| (0..d).map(|j| (ds.features[i][j] - mean[j]) / std[j]).collect())
        .collect();
    let ys: Vec<u8> = idx.iter().map(|&i| ds.labels[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..d).map(|_| (rng.random::<f64>() - 0.5) * 0.02).collect();
    let mut b = 0.0f64;
    let mut lr = learning_rate;
    let mut loss_curve = Vec::with_capacity(epochs as usize + 1);
    let eval = |w: &[f64], b: f64| -> Vec<f64> {
        xs.iter()
            .map(|x| sigmoid(x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b))
            .collect()
    };
    let mut loss = cross_entropy(&eval(&w, b), &ys);
    loss_curve.push(loss);
    for _ in 0..epochs {
        let scores = eval(&w, b);
        let mut grad_w = vec![0.0; d];
        let mut grad_b = 0.0;
        for (k, x) in xs.iter().enumerate() {
            let err = scores[k] - ys[k] as f64;
            for j in 0..d {
                grad_w[j] += err * x[j];
            }
            grad_b += err;
        }
        for g in &mut grad_w {
            *g /= n as f64;
        }
        grad_b /= n as f64;
        // step-halving line search on the full batch
        loop {
            let w_new: Vec<f64> = w.iter().zip(&grad_w).map(|(a, g)| a - lr * g).collect();
            let b_new = b - lr * grad_b;
            let new_loss = cross_entropy(&eval(&w_new, b_new), &ys);
            if !new_loss.is_finite() {
                return Err(LearnError::Divergence);
            }
            if new_loss <= loss || lr < 1e-14 {
                w = w_new;
                b = b_new;
                loss = new_loss.min(loss);
                break;
            }
            lr /= 2.0;
        }
        loss_curve.push(loss);
    }
    if !loss.is_finite() {
        return Err(LearnError::Divergence);
    }
    Ok(LogisticModel { weights: w, bias: b, mean, std, loss_curve })
}

#[cfg(test)]
mod tests {
    use super::super::{synth_blobs, LabeledDataset};
    use super::*;

    fn dataset() -> LabeledDataset {
        LabeledDataset::balanced(
            vec!["x".into(), "y".into()],
            synth_blobs(200, 3.0, 5),
            9,
        )
        .unwrap()
    }

    #[test]
    fn separable_blobs_high_accuracy() {
        let ds = dataset();
        let model = train_logistic(&ds, 0.1, 500, 1).unwrap();
        let scores = model.scores(&ds, &ds.test_idx);
        let correct = scores
            .iter()
            .zip(ds.test_idx.iter().map(|&i| ds.labels[i]))
            .filter(|(&s, y)| (s >= 0.5) == (*y == 1))
            .count();
        let acc = correct as f64 / scores.len() as f64;
        assert!(acc >= 0.95, "accuracy {acc}");
    }

    #[test]
    fn loss_non_increasing() {
        let ds = dataset();
        let model = train_logistic(&ds, 0.5, 200, 1).unwrap();
        for w in model.loss_curve.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn fixed_seed_bit_identical() {
        let ds = dataset();
        let a = train_logistic(&ds, 0.1, 300, 42).unwrap();
        let b = train_logistic(&ds, 0.1, 300, 42).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
        let c = train_logistic(&ds, 0.1, 300, 43).unwrap();
        assert_ne!(a.weights, c.weights);
    }
}
