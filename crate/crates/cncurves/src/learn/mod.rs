//! Feature pipelines and from-scratch classifiers for the congruent-number
//! prediction experiments: logistic regression, a CART decision tree, the
//! metric suite and PCA.

mod logistic;
mod metrics;
mod pca;
mod tree;

pub use logistic::{train_logistic, LogisticModel};
pub use metrics::{evaluate_scores, MetricsReport};
pub use pca::{pca, PcaResult};
pub use tree::{train_tree, TreeModel};

use crate::data::CurveRecord;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("required column {0} is missing from the records")]
    MissingColumn(&'static str),
    #[error("cannot balance: one of the label classes is empty")]
    Unbalanceable,
    #[error("training diverged: non-finite loss")]
    Divergence,
    #[error("test split contains a single class: ROC AUC undefined")]
    SingleClassTest,
    #[error("matrix has no variance: PCA undefined")]
    DegenerateInput,
    #[error("need at least {0} rows")]
    TooFewRows(usize),
}

/// Which feature family to extract from records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSpec {
    /// D mod 16, D mod 32, ω(D), D mod 8
    Residues,
    /// regulator, Tamagawa product, torsion order, real period, L(1)
    Bsd,
    /// 2-Selmer rank, 3-Selmer rank, 2-valuation of the modular degree
    Selmer,
    /// a_p at the first k primes (columns provided by the caller)
    Traces,
}

/// A balanced, split, numeric dataset.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub ids: Vec<u64>,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

impl LabeledDataset {
    /// Balanced construction: the majority class is subsampled uniformly at
    /// random (seeded) to the minority size, then each class is split
    /// 80/20 separately so both splits stay balanced to within one row.
    pub fn balanced(
        feature_names: Vec<String>,
        rows: Vec<(u64, Vec<f64>, u8)>,
        seed: u64,
    ) -> Result<Self, LearnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut by_class: [Vec<(u64, Vec<f64>, u8)>; 2] = [Vec::new(), Vec::new()];
        for row in rows {
            by_class[(row.2 != 0) as usize].push(row);
        }
        if by_class[0].is_empty() || by_class[1].is_empty() {
            return Err(LearnError::Unbalanceable);
        }
        let target = by_class[0].len().min(by_class[1].len());
        if target < 5 {
            return Err(LearnError::TooFewRows(10));
        }
        let mut ids = Vec::new();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for class_rows in by_class.iter_mut() {
            class_rows.sort_by_key(|r| r.0); // deterministic base order
            class_rows.shuffle(&mut rng);
            class_rows.truncate(target);
            let n_train = (target * 4) / 5;
            for (i, (id, f, l)) in class_rows.drain(..).enumerate() {
                let idx = ids.len();
                ids.push(id);
                features.push(f);
                labels.push(l);
                if i < n_train {
                    train_idx.push(idx);
                } else {
                    test_idx.push(idx);
                }
            }
        }
        // shuffle the split orders themselves so training is order-free
        train_idx.shuffle(&mut rng);
        test_idx.shuffle(&mut rng);
        Ok(LabeledDataset { feature_names, features, labels, ids, train_idx, test_idx })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Extracts one experiment's feature matrix from validated records and
/// balances it by congruence label. `traces` supplies per-curve rows for
/// the trace experiment, aligned with `records` by index.
pub fn build_features(
    records: &[CurveRecord],
    spec: FeatureSpec,
    traces: Option<&[Vec<f64>]>,
    seed: u64,
) -> Result<LabeledDataset, LearnError> {
    let names: Vec<String> = match spec {
        FeatureSpec::Residues => ["d_mod16", "d_mod32", "omega", "d_mod8"]
            .map(String::from)
            .to_vec(),
        FeatureSpec::Bsd => ["regulator", "tamagawa", "torsion", "omega_period", "l1"]
            .map(String::from)
            .to_vec(),
        FeatureSpec::Selmer => ["s2", "sel3_dim", "moddeg_val2"].map(String::from).to_vec(),
        FeatureSpec::Traces => {
            let k = traces
                .ok_or(LearnError::MissingColumn("trace matrix"))?
                .first()
                .map(|r| r.len())
                .unwrap_or(0);
            (0..k).map(|i| format!("ap_{i}")).collect()
        }
    };
    let mut rows: Vec<(u64, Vec<f64>, u8)> = Vec::new();
    let mut missing_column = false;
    for (i, r) in records.iter().enumerate() {
        let Some(label) = r.congruence_label() else { continue };
        let f: Option<Vec<f64>> = match spec {
            FeatureSpec::Residues => Some(vec![
                (r.d % 16) as f64,
                (r.d % 32) as f64,
                r.omega as f64,
                (r.d % 8) as f64,
            ]),
            FeatureSpec::Bsd => match (r.regulator, r.omega_period, r.l1, r.tamagawa) {
                (Some(reg), Some(op), Some(l1), Some(t)) => {
                    Some(vec![reg, t as f64, 4.0, op, l1])
                }
                _ => {
                    missing_column = true;
                    None
                }
            },
            FeatureSpec::Selmer => match (r.sel3_dim, r.modular_degree_val2) {
                (Some(s3), Some(mv)) => Some(vec![r.s2 as f64, s3 as f64, mv as f64]),
                _ => {
                    missing_column = true;
                    None
                }
            },
            FeatureSpec::Traces => traces.and_then(|t| t.get(i).cloned()),
        };
        if let Some(f) = f {
            rows.push((r.d, f, label));
        }
    }
    if rows.is_empty() {
        return Err(if missing_column {
            match spec {
                FeatureSpec::Bsd => LearnError::MissingColumn("regulator/omega_period/l1/tamagawa"),
                _ => LearnError::MissingColumn("sel3_dim/modular_degree_val2"),
            }
        } else {
            LearnError::TooFewRows(10)
        });
    }
    LabeledDataset::balanced(names, rows, seed)
}

#[cfg(test)]
pub(crate) fn synth_blobs(n: usize, gap: f64, seed: u64) -> Vec<(u64, Vec<f64>, u8)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = (i % 2) as u8;
            let center = if label == 1 { gap } else { -gap };
            let x = center + rng.random::<f64>() - 0.5;
            let y = rng.random::<f64>();
            (i as u64, vec![x, y], label)
        })
        .collect()
}
