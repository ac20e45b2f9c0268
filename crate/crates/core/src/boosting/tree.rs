//! Depth-limited decision trees over quantized features.

use alloc::format;
use alloc::vec::Vec;

use super::quantize::QuantizedSet;
use crate::error::{arg, Error, Result};
use crate::par;

/// Maximum tree depth.
pub const MAX_DEPTH: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    /// Samples with `x[feature] < threshold` go to `left`.
    Split { feature: usize, threshold: f32, left: usize, right: usize },
    Leaf { value: f64 },
}

/// Binary tree stored in preorder; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validate preorder layout, child links and depth.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(arg("a tree needs at least one node"));
        }
        let mut next = 0;
        check_preorder(&nodes, 0, 0, &mut next)?;
        if next != nodes.len() {
            return Err(arg(format!("tree has {} unreachable nodes", nodes.len() - next)));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }

    /// Evaluate on a feature accessor.
    #[inline]
    pub fn eval(&self, x: impl Fn(usize) -> f32) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x(feature) < threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f32]) -> f64 {
        self.eval(|f| x[f])
    }
}

fn check_preorder(nodes: &[Node], i: usize, depth: usize, next: &mut usize) -> Result<()> {
    if i != *next || i >= nodes.len() {
        return Err(arg(format!("tree node {i} is out of preorder")));
    }
    if depth > MAX_DEPTH {
        return Err(arg(format!("tree deeper than {MAX_DEPTH}")));
    }
    *next += 1;
    match nodes[i] {
        Node::Leaf { value } if value.is_finite() => Ok(()),
        Node::Leaf { .. } => Err(arg("tree leaf value must be finite")),
        Node::Split { left, right, threshold, .. } => {
            if !threshold.is_finite() {
                return Err(arg("tree threshold must be finite"));
            }
            check_preorder(nodes, left, depth + 1, next)?;
            check_preorder(nodes, right, depth + 1, next)
        }
    }
}

/// Tree fitted on quantized data, with the bin cut of every split so
/// training samples can be routed without their raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTree {
    pub tree: Tree,
    /// Per node, `Some((feature, bin))` for splits: left when `bin(x) <= bin`.
    cuts: Vec<Option<(usize, u8)>>,
    /// Weighted misclassification error on the training weights.
    pub error: f64,
}

impl FittedTree {
    pub fn predict_sample(&self, data: &QuantizedSet, sample: usize) -> f64 {
        let mut i = 0;
        loop {
            match self.tree.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { left, right, .. } => {
                    let (f, b) = self.cuts[i].expect("split has a cut");
                    i = if data.bin(sample, f) <= b { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitChoice {
    feature: usize,
    bin: u8,
    error: f64,
}

/// Best split of `samples` by weighted misclassification error; ties go to
/// the lowest feature, then the lowest threshold. Splits leaving one side
/// without weight are skipped.
fn best_split(
    data: &QuantizedSet,
    labels: &[i8],
    weights: &[f64],
    samples: &[u32],
    features: Option<&[usize]>,
) -> Option<SplitChoice> {
    let count = features.map_or(data.n_features(), |f| f.len());
    let per_feature = par::map_range(count, |i| {
        let f = features.map_or(i, |fs| fs[i]);
        let k = data.thresholds(f).len();
        if k == 0 {
            return None;
        }
        let col = data.column(f);
        let mut hist = [[0.0f64; 2]; 256];
        for &s in samples {
            let s = s as usize;
            hist[col[s] as usize][(labels[s] < 0) as usize] += weights[s];
        }
        let (tp, tn) = hist[..=k].iter().fold((0.0, 0.0), |a, h| (a.0 + h[0], a.1 + h[1]));
        let (mut lp, mut ln) = (0.0, 0.0);
        let mut best: Option<SplitChoice> = None;
        for b in 0..k {
            lp += hist[b][0];
            ln += hist[b][1];
            let (rp, rn) = (tp - lp, tn - ln);
            if lp + ln <= 0.0 || rp + rn <= 0.0 {
                continue;
            }
            let err = lp.min(ln) + rp.min(rn);
            if best.is_none_or(|c| err < c.error) {
                best = Some(SplitChoice { feature: f, bin: b as u8, error: err });
            }
        }
        best
    });
    per_feature
        .into_iter()
        .flatten()
        .fold(None, |acc: Option<SplitChoice>, c| match acc {
            Some(a) if a.error <= c.error => Some(a),
            _ => Some(c),
        })
}

/// Greedy top-down tree of depth at most `max_depth`.
///
/// A node becomes a leaf when it is pure, at maximum depth, or cannot be
/// split; otherwise it takes its best split even if that does not lower the
/// error, so interactions such as XOR remain reachable.
pub fn train_tree(data: &QuantizedSet, labels: &[i8], weights: &[f64], max_depth: usize) -> Result<FittedTree> {
    train_tree_on(data, labels, weights, max_depth, None)
}

/// [`train_tree`] restricted to the candidate `features` (ascending), or to
/// all of them when `None`.
pub fn train_tree_on(
    data: &QuantizedSet,
    labels: &[i8],
    weights: &[f64],
    max_depth: usize,
    features: Option<&[usize]>,
) -> Result<FittedTree> {
    let n = data.n_samples();
    if labels.len() != n || weights.len() != n {
        return Err(arg("labels and weights must match the sample count"));
    }
    if max_depth > MAX_DEPTH {
        return Err(arg(format!("depth {max_depth} exceeds {MAX_DEPTH}")));
    }
    let has_pos = labels.iter().any(|&y| y > 0);
    let has_neg = labels.iter().any(|&y| y < 0);
    if !has_pos || !has_neg {
        return Err(Error::DegenerateData("training data must contain both classes".into()));
    }
    if let Some(fs) = features {
        if fs.iter().any(|&f| f >= data.n_features()) || fs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(arg("candidate features must be ascending and in range"));
        }
    }
    let all: Vec<u32> = (0..n as u32).collect();
    let mut nodes = Vec::new();
    let mut cuts = Vec::new();
    let error = grow(data, labels, weights, features, &all, 0, max_depth, &mut nodes, &mut cuts);
    Ok(FittedTree { tree: Tree { nodes }, cuts, error })
}

#[allow(clippy::too_many_arguments)]
fn grow(
    data: &QuantizedSet,
    labels: &[i8],
    weights: &[f64],
    features: Option<&[usize]>,
    samples: &[u32],
    depth: usize,
    max_depth: usize,
    nodes: &mut Vec<Node>,
    cuts: &mut Vec<Option<(usize, u8)>>,
) -> f64 {
    let (wp, wn) = samples.iter().fold((0.0, 0.0), |(p, q), &s| {
        let w = weights[s as usize];
        if labels[s as usize] > 0 {
            (p + w, q)
        } else {
            (p, q + w)
        }
    });
    let leaf_value = if wp > wn { 1.0 } else { -1.0 };
    let leaf_error = wp.min(wn);
    let at = nodes.len();
    nodes.push(Node::Leaf { value: leaf_value });
    cuts.push(None);
    if depth >= max_depth || leaf_error == 0.0 {
        return leaf_error;
    }
    let Some(choice) = best_split(data, labels, weights, samples, features) else {
        return leaf_error;
    };
    let col = data.column(choice.feature);
    let (left, right): (Vec<u32>, Vec<u32>) = samples.iter().partition(|&&s| col[s as usize] <= choice.bin);
    let threshold = data.thresholds(choice.feature)[choice.bin as usize];
    let l = nodes.len();
    let le = grow(data, labels, weights, features, &left, depth + 1, max_depth, nodes, cuts);
    let r = nodes.len();
    let re = grow(data, labels, weights, features, &right, depth + 1, max_depth, nodes, cuts);
    nodes[at] = Node::Split { feature: choice.feature, threshold, left: l, right: r };
    cuts[at] = Some((choice.feature, choice.bin));
    le + re
}

/// Weighted error of a fitted tree.
pub fn weighted_error(fit: &FittedTree, data: &QuantizedSet, labels: &[i8], weights: &[f64]) -> f64 {
    (0..data.n_samples())
        .filter(|&s| fit.predict_sample(data, s) * labels[s] as f64 <= 0.0)
        .map(|s| weights[s])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn uniform(n: usize) -> Vec<f64> {
        vec![1.0 / n as f64; n]
    }

    #[test]
    fn separable_one_dimensional() {
        let xs = [-3.0f32, -2.0, -1.0, 1.0, 2.0, 3.0];
        let rows: Vec<Vec<f32>> = xs.iter().map(|&x| vec![x]).collect();
        let labels: Vec<i8> = xs.iter().map(|&x| if x > 0.0 { 1 } else { -1 }).collect();
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let fit = train_tree(&q, &labels, &uniform(6), 3).unwrap();
        assert_eq!(fit.error, 0.0);
        assert_eq!(fit.tree.depth(), 1);
        match fit.tree.nodes()[0] {
            Node::Split { feature: 0, threshold, .. } => assert_eq!(threshold, 0.0),
            other => panic!("{other:?}"),
        }
        for (r, y) in rows.iter().zip(&labels) {
            assert_eq!(fit.tree.predict(r), *y as f64);
        }
    }

    #[test]
    fn xor_is_learned_at_depth_two() {
        let pts = [(0.0f32, 0.0f32, -1i8), (0.0, 1.0, 1), (1.0, 0.0, 1), (1.0, 1.0, -1)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..3 {
            for &(a, b, y) in &pts {
                rows.push(vec![a, b]);
                labels.push(y);
            }
        }
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let fit = train_tree(&q, &labels, &uniform(rows.len()), 3).unwrap();
        assert_eq!(fit.error, 0.0);
        assert!(fit.tree.depth() <= 2);
        let d1 = train_tree(&q, &labels, &uniform(rows.len()), 1).unwrap();
        assert!((d1.error - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_outlier_is_isolated() {
        let mut rows: Vec<Vec<f32>> = (0..9).map(|i| vec![i as f32]).collect();
        rows.push(vec![100.0]);
        let mut labels = vec![1i8; 10];
        labels[9] = -1;
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let fit = train_tree(&q, &labels, &uniform(10), 1).unwrap();
        assert_eq!(fit.error, 0.0);
        // with an unreachable outlier (duplicate coordinates) the best is 1/N
        let mut rows2 = rows.clone();
        rows2[9] = vec![4.0];
        let q2 = QuantizedSet::from_rows(&rows2).unwrap();
        let fit2 = train_tree(&q2, &labels, &uniform(10), 3).unwrap();
        assert!((fit2.error - 0.1).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let rows: Vec<Vec<f32>> = (0..6).map(|i| vec![i as f32, i as f32, i as f32]).collect();
        let labels: Vec<i8> = (0..6).map(|i| if i < 3 { -1 } else { 1 }).collect();
        let q = QuantizedSet::from_rows(&rows).unwrap();
        let fit = train_tree(&q, &labels, &uniform(6), 3).unwrap();
        assert!(matches!(fit.tree.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn single_class_is_degenerate() {
        let q = QuantizedSet::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(train_tree(&q, &[1, 1], &uniform(2), 3), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn from_nodes_validates_layout() {
        let ok = vec![
            Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2 },
            Node::Leaf { value: -1.0 },
            Node::Leaf { value: 1.0 },
        ];
        assert!(Tree::from_nodes(ok).is_ok());
        let bad = vec![
            Node::Split { feature: 0, threshold: 0.5, left: 2, right: 1 },
            Node::Leaf { value: -1.0 },
            Node::Leaf { value: 1.0 },
        ];
        assert!(Tree::from_nodes(bad).is_err());
        let split = |left, right| Node::Split { feature: 0, threshold: 0.0, left, right };
        let leaf = Node::Leaf { value: 1.0 };
        let deep = vec![split(1, 8), split(2, 7), split(3, 6), split(4, 5), leaf, leaf, leaf, leaf, leaf];
        assert!(Tree::from_nodes(deep).is_err());
        let three = vec![split(1, 6), split(2, 5), split(3, 4), leaf, leaf, leaf, leaf];
        assert_eq!(Tree::from_nodes(three).unwrap().depth(), 3);
    }
}
