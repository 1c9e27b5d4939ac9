//! CART-style decision tree: greedy axis-aligned splits minimizing Gini
//! impurity, deterministic tie-breaking by lowest feature index then lowest
//! threshold.

use super::{LabeledDataset, LearnError};

#[derive(Debug, Clone)]
pub enum Node {
    Leaf { prob: f64, count: usize },
    Split { feature: usize, threshold: f64, left: Box<Node>, right: Box<Node> },
}

#[derive(Debug, Clone)]
pub struct TreeModel {
    pub root: Node,
    pub max_depth: u32,
    pub min_leaf: usize,
}

impl TreeModel {
    /// Probability of class 1 at the leaf reached by x.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { prob, .. } => return *prob,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn scores(&self, ds: &LabeledDataset, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.score(&ds.features[i])).collect()
    }

    pub fn depth(&self) -> u32 {
        fn go(n: &Node) -> u32 {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }
}

fn gini(ones: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = ones as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    ds: &'a LabeledDataset,
    max_depth: u32,
    min_leaf: usize,
}

impl Grower<'_> {
    fn leaf(&self, rows: &[usize]) -> Node {
        let ones: usize = rows.iter().map(|&i| self.ds.labels[i] as usize).sum();
        Node::Leaf { prob: ones as f64 / rows.len().max(1) as f64, count: rows.len() }
    }

    fn grow(&self, rows: &mut Vec<usize>, depth: u32) -> Node {
        let total = rows.len();
        let ones: usize = rows.iter().map(|&i| self.ds.labels[i] as usize).sum();
        let parent_gini = gini(ones, total);
        if depth >= self.max_depth || parent_gini == 0.0 || total < 2 * self.min_leaf {
            return self.leaf(rows);
        }
        // best split: (weighted impurity, feature, threshold); strict
        // inequality on impurity keeps the lowest feature/threshold on ties
        let mut best: Option<(f64, usize, f64)> = None;
        let nf = self.ds.n_features();
        for feature in 0..nf {
            let mut vals: Vec<(f64, u8)> = rows
                .iter()
                .map(|&i| (self.ds.features[i][feature], self.ds.labels[i]))
                .collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_ones = 0usize;
            for k in 0..total - 1 {
                left_ones += vals[k].1 as usize;
                if vals[k].0 == vals[k + 1].0 {
                    continue; // no boundary between equal values
                }
                let left_n = k + 1;
                let right_n = total - left_n;
                if left_n < self.min_leaf || right_n < self.min_leaf {
                    continue;
                }
                let w = left_n as f64 * gini(left_ones, left_n)
                    + right_n as f64 * gini(ones - left_ones, right_n);
                let w = w / total as f64;
                let threshold = (vals[k].0 + vals[k + 1].0) / 2.0;
                let better = match best {
                    None => w < parent_gini - 1e-15,
                    Some((bw, _, _)) => w < bw - 1e-15,
                };
                if better {
                    best = Some((w, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(rows);
        };
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows
            .drain(..)
            .partition(|&i| self.ds.features[i][feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(&mut left, depth + 1)),
            right: Box::new(self.grow(&mut right, depth + 1)),
        }
    }
}

pub fn train_tree(ds: &LabeledDataset, max_depth: u32, min_leaf: usize) -> Result<TreeModel, LearnError> {
    if ds.train_idx.is_empty() {
        return Err(LearnError::TooFewRows(1));
    }
    let grower = Grower { ds, max_depth: max_depth.max(1), min_leaf: min_leaf.max(1) };
    let mut rows = ds.train_idx.clone();
    rows.sort_unstable(); // order-independent growth
    let root = grower.grow(&mut rows, 0);
    Ok(TreeModel { root, max_depth, min_leaf })
}

#[cfg(test)]
mod tests {
    use super::super::{synth_blobs, LabeledDataset};
    use super::*;

    #[test]
    fn xor_needs_depth_two() {
        // four XOR corners, replicated to satisfy balance minimums
        let mut rows = Vec::new();
        for rep in 0..10u64 {
            for (x, y) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
                let label = ((x != y) as u8) & 1;
                rows.push((rep * 4 + (2.0 * x + y) as u64, vec![x, y], label));
            }
        }
        let ds = LabeledDataset::balanced(vec!["x".into(), "y".into()], rows, 1).unwrap();
        let tree = train_tree(&ds, 2, 1).unwrap();
        let all: Vec<usize> = (0..ds.labels.len()).collect();
        let scores = tree.scores(&ds, &all);
        for (s, &y) in scores.iter().zip(&ds.labels) {
            assert_eq!((*s >= 0.5) as u8, y);
        }
    }

    #[test]
    fn depth_one_on_separable() {
        let ds =
            LabeledDataset::balanced(vec!["x".into(), "y".into()], synth_blobs(200, 3.0, 2), 5)
                .unwrap();
        let tree = train_tree(&ds, 1, 1).unwrap();
        assert!(tree.depth() <= 1);
        let scores = tree.scores(&ds, &ds.test_idx);
        let correct = scores
            .iter()
            .zip(ds.test_idx.iter().map(|&i| ds.labels[i]))
            .filter(|(&s, y)| (s >= 0.5) == (*y == 1))
            .count();
        assert!(correct as f64 / scores.len() as f64 >= 0.95);
    }

    #[test]
    fn pure_node_stops() {
        let rows: Vec<(u64, Vec<f64>, u8)> = (0..40u64)
            .map(|i| (i, vec![if i % 2 == 0 { 0.0 } else { 10.0 }], (i % 2) as u8))
            .collect();
        let ds = LabeledDataset::balanced(vec!["x".into()], rows, 3).unwrap();
        let tree = train_tree(&ds, 8, 1).unwrap();
        // one split separates perfectly; pure children must not split further
        assert_eq!(tree.depth(), 1);
    }
}
