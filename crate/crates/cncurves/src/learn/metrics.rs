//! Classification metrics: accuracy, precision, recall, F1, ROC AUC by the
//! Mann-Whitney rank statistic (ties get average ranks), and the 2×2
//! confusion matrix in [[TN, FP], [FN, TP]] layout.

use super::LearnError;
use serde::Serialize;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub confusion: [[u64; 2]; 2],
}

/// Metrics from model scores and true labels; predictions threshold at 0.5.
pub fn evaluate_scores(scores: &[f64], labels: &[u8]) -> Result<MetricsReport, LearnError> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::SingleClassTest);
    }
    let (mut tp, mut tn, mut fp, mut fnn) = (0u64, 0u64, 0u64, 0u64);
    for (&s, &y) in scores.iter().zip(labels) {
        match ((s >= 0.5) as u8, y) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (1, 0) => fp += 1,
            _ => fnn += 1,
        }
    }
    let total = (tp + tn + fp + fnn) as f64;
    let accuracy = (tp + tn) as f64 / total;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fnn == 0 { 0.0 } else { tp as f64 / (tp + fnn) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        roc_auc: roc_auc(scores, labels),
        confusion: [[tn, fp], [fnn, tp]],
    })
}

/// Exact AUC = (R⁺ − n⁺(n⁺+1)/2) / (n⁺·n⁻) with average ranks over ties;
/// no threshold sweep discretization.
fn roc_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // 1-based average rank of the tie block
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = n as f64 - n_pos;
    let r_pos: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| r)
        .sum();
    (r_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}
