//! Discrete AdaBoost rounds, soft-cascade scoring and the trained model.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::quantize::QuantizedSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{train_tree_on, Tree, MAX_DEPTH};
use crate::aggregate::WindowSpec;
use crate::error::{arg, Error, Result};
use crate::features::ChannelConfig;
use crate::pyramid::LambdaTable;

/// Error floor for perfect weak learners.
pub const EPS_FLOOR: f64 = 1e-6;

/// `(beta, alpha)` for a weak-learner error: `beta = e / (1 - e)` and
/// `alpha = ln(1 / beta)`, with `e` floored at [`EPS_FLOOR`].
pub fn beta_alpha(error: f64) -> (f64, f64) {
    let e = error.max(EPS_FLOOR);
    let beta = e / (1.0 - e);
    (beta, -libm::log(beta))
}

/// Class-balanced initial weights: each class carries half the mass.
pub fn balanced_weights(labels: &[i8]) -> Result<Vec<f64>> {
    let pos = labels.iter().filter(|&&y| y > 0).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateData(format!("{pos} positives and {neg} negatives")));
    }
    Ok(labels
        .iter()
        .map(|&y| if y > 0 { 0.5 / pos as f64 } else { 0.5 / neg as f64 })
        .collect())
}

/// `sum_i w0_i exp(-y_i H(x_i) / 2)`: the quantity the AdaBoost weights
/// track, which every round multiplies by `2 sqrt(e (1 - e)) <= 1`.
pub fn exp_loss(margins: &[f64], labels: &[i8], w0: &[f64]) -> f64 {
    margins
        .iter()
        .zip(labels)
        .zip(w0)
        .map(|((h, &y), w)| w * libm::exp(-(y as f64) * h / 2.0))
        .sum()
}

/// Result of scoring one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    Accepted(f64),
    /// Rejected by the cascade after tree `stage` with running sum `partial`.
    Rejected { stage: usize, partial: f64 },
}

impl Score {
    pub fn accepted(self) -> Option<f64> {
        match self {
            Score::Accepted(s) => Some(s),
            Score::Rejected { .. } => None,
        }
    }
}

/// Weighted trees with per-tree cascade thresholds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ensemble {
    trees: Vec<Tree>,
    alphas: Vec<f64>,
    cascade: Vec<f64>,
}

impl Ensemble {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(trees: Vec<Tree>, alphas: Vec<f64>, cascade: Vec<f64>) -> Result<Self> {
        if trees.len() != alphas.len() || trees.len() != cascade.len() {
            return Err(arg(format!(
                "{} trees, {} alphas and {} cascade thresholds",
                trees.len(),
                alphas.len(),
                cascade.len()
            )));
        }
        if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(arg("tree weights must be positive and finite"));
        }
        if cascade.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
            return Err(arg("cascade thresholds must be finite or -inf"));
        }
        Ok(Self { trees, alphas, cascade })
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn cascade(&self) -> &[f64] {
        &self.cascade
    }

    /// Append a tree with the cascade threshold disabled.
    pub fn push(&mut self, tree: Tree, alpha: f64) {
        self.trees.push(tree);
        self.alphas.push(alpha);
        self.cascade.push(f64::NEG_INFINITY);
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.trees.iter().filter_map(|t| t.max_feature()).max()
    }

    /// Sum over all trees, ignoring the cascade.
    pub fn score_full(&self, x: impl Fn(usize) -> f32) -> f64 {
        self.trees.iter().zip(&self.alphas).map(|(t, a)| a * t.eval(&x)).sum()
    }

    /// Running sum with early exit when a partial sum drops below its threshold.
    #[inline]
    pub fn score_with(&self, x: impl Fn(usize) -> f32) -> Score {
        let mut sum = 0.0;
        for (t, tree) in self.trees.iter().enumerate() {
            sum += self.alphas[t] * tree.eval(&x);
            if sum < self.cascade[t] {
                return Score::Rejected { stage: t, partial: sum };
            }
        }
        Score::Accepted(sum)
    }

    pub fn partial_sums(&self, x: impl Fn(usize) -> f32) -> Vec<f64> {
        let mut sum = 0.0;
        self.trees
            .iter()
            .zip(&self.alphas)
            .map(|(t, a)| {
                sum += a * t.eval(&x);
                sum
            })
            .collect()
    }

    pub fn disable_cascade(&mut self) {
        self.cascade.iter_mut().for_each(|t| *t = f64::NEG_INFINITY);
    }

    /// Set every threshold to the smallest partial sum reached by a positive
    /// whose full score exceeds `score_threshold`, minus `margin`.
    pub fn calibrate_cascade<V: AsRef<[f32]>>(
        &mut self,
        positives: impl IntoIterator<Item = V>,
        score_threshold: f64,
        margin: f64,
    ) {
        let mut mins = vec![f64::INFINITY; self.len()];
        for p in positives {
            let p = p.as_ref();
            let sums = self.partial_sums(|f| p[f]);
            if sums.last().is_none_or(|&s| s > score_threshold) {
                for (m, s) in mins.iter_mut().zip(sums) {
                    *m = m.min(s);
                }
            }
        }
        for (c, m) in self.cascade.iter_mut().zip(mins) {
            *c = if m.is_finite() { m - margin } else { f64::NEG_INFINITY };
        }
    }
}

/// Statistics of one boosting round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundStats {
    pub error: f64,
    pub beta: f64,
    pub alpha: f64,
    /// Weighted error of the new tree under the updated weights.
    pub post_error: f64,
    /// [`exp_loss`] after the round.
    pub loss: f64,
    /// Fraction of samples with `sign(H) != y` (H = 0 counts as negative).
    pub train_error: f64,
}

/// Incremental AdaBoost state over a fixed training set.
#[derive(Debug, Clone)]
pub struct Booster<'a> {
    data: &'a QuantizedSet,
    labels: &'a [i8],
    w0: Vec<f64>,
    weights: Vec<f64>,
    margins: Vec<f64>,
    sampler: Option<(usize, ChaCha8Rng)>,
    pub ensemble: Ensemble,
}

/// Per-tree random feature subsampling: each tree only considers
/// `ceil(fraction * n_features)` features drawn with a seeded generator.
/// Keeps trees diverse when a single tree already separates the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSampling {
    pub fraction: f64,
    pub seed: u64,
}

impl<'a> Booster<'a> {
    pub fn new(data: &'a QuantizedSet, labels: &'a [i8], w0: Vec<f64>) -> Result<Self> {
        let n = data.n_samples();
        if labels.len() != n || w0.len() != n {
            return Err(arg("labels and weights must match the sample count"));
        }
        let total: f64 = w0.iter().sum();
        if w0.iter().any(|w| !(*w > 0.0)) || !total.is_finite() {
            return Err(arg("initial weights must be positive"));
        }
        let weights: Vec<f64> = w0.iter().map(|w| w / total).collect();
        Ok(Self { data, labels, w0: weights.clone(), weights, margins: vec![0.0; n], sampler: None, ensemble: Ensemble::new() })
    }

    pub fn with_sampling(mut self, sampling: FeatureSampling) -> Result<Self> {
        if !(sampling.fraction > 0.0 && sampling.fraction <= 1.0) {
            return Err(arg(format!("feature fraction {} must lie in (0, 1]", sampling.fraction)));
        }
        let n = self.data.n_features();
        let k = (libm::ceil(sampling.fraction * n as f64) as usize).clamp(1, n.max(1));
        self.sampler = if k < n { Some((k, ChaCha8Rng::seed_from_u64(sampling.seed))) } else { None };
        Ok(self)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn loss(&self) -> f64 {
        exp_loss(&self.margins, self.labels, &self.w0)
    }

    /// Fit one tree, append it, and reweight: correct samples are scaled by
    /// `beta`, then all weights are renormalized.
    pub fn round(&mut self) -> Result<RoundStats> {
        let subset = self.sampler.as_mut().map(|(k, rng)| {
            let mut fs = rand::seq::index::sample(rng, self.data.n_features(), *k).into_vec();
            fs.sort_unstable();
            fs
        });
        let fit = train_tree_on(self.data, self.labels, &self.weights, MAX_DEPTH, subset.as_deref())?;
        let n = self.data.n_samples();
        let preds: Vec<f64> = (0..n).map(|s| fit.predict_sample(self.data, s)).collect();
        let correct: Vec<bool> = preds.iter().zip(self.labels).map(|(p, &y)| p * y as f64 > 0.0).collect();
        let error: f64 = self.weights.iter().zip(&correct).filter(|(_, c)| !**c).map(|(w, _)| w).sum();
        if error >= 0.5 {
            return Err(Error::DegenerateData(format!("weak learner error {error} is not below 0.5")));
        }
        let (beta, alpha) = beta_alpha(error);
        for (w, &c) in self.weights.iter_mut().zip(&correct) {
            if c {
                *w *= beta;
            }
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
        for (m, p) in self.margins.iter_mut().zip(&preds) {
            *m += alpha * p;
        }
        self.ensemble.push(fit.tree, alpha);
        let post_error = self.weights.iter().zip(&correct).filter(|(_, c)| !**c).map(|(w, _)| w).sum();
        let wrong = self.margins.iter().zip(self.labels).filter(|(m, &y)| (**m > 0.0) != (y > 0)).count();
        Ok(RoundStats { error, beta, alpha, post_error, loss: self.loss(), train_error: wrong as f64 / n as f64 })
    }
}

/// Outcome of [`boost`].
#[derive(Debug, Clone)]
pub struct BoostOutcome {
    pub ensemble: Ensemble,
    pub rounds: Vec<RoundStats>,
    /// Why training stopped before the requested number of rounds.
    pub stopped_early: Option<String>,
}

/// Run up to `rounds` AdaBoost rounds from `w0`. A weak learner that cannot
/// beat chance ends training; on the first round that is an error.
pub fn boost(data: &QuantizedSet, labels: &[i8], w0: Vec<f64>, rounds: usize) -> Result<BoostOutcome> {
    boost_with(data, labels, w0, rounds, None)
}

/// [`boost`] with optional per-tree feature subsampling.
pub fn boost_with(
    data: &QuantizedSet,
    labels: &[i8],
    w0: Vec<f64>,
    rounds: usize,
    sampling: Option<FeatureSampling>,
) -> Result<BoostOutcome> {
    let mut b = Booster::new(data, labels, w0)?;
    if let Some(s) = sampling {
        b = b.with_sampling(s)?;
    }
    let mut stats = Vec::with_capacity(rounds);
    let mut stopped_early = None;
    for t in 0..rounds {
        match b.round() {
            Ok(s) => stats.push(s),
            Err(e) if t > 0 => {
                stopped_early = Some(format!("round {t}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(BoostOutcome { ensemble: b.ensemble, rounds: stats, stopped_early })
}

/// Trained detector: ensemble plus everything needed to rebuild its features.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostedModel {
    pub ensemble: Ensemble,
    pub window: WindowSpec,
    pub channels: ChannelConfig,
    pub lambda: LambdaTable,
}

impl BoostedModel {
    pub fn new(ensemble: Ensemble, window: WindowSpec, channels: ChannelConfig, lambda: LambdaTable) -> Result<Self> {
        let m = Self { ensemble, window, channels, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.channels.validate()?;
        if self.window.shrink != self.channels.shrink {
            return Err(arg("window and channel configuration disagree on shrink"));
        }
        if let Some(f) = self.ensemble.max_feature() {
            if f >= self.vector_len() {
                return Err(arg(format!("tree feature {f} outside a {}-long window vector", self.vector_len())));
            }
        }
        Ok(())
    }

    pub fn vector_len(&self) -> usize {
        self.window.vector_len(self.channels.channel_count())
    }

    pub fn score(&self, x: &[f32]) -> Result<Score> {
        if x.len() != self.vector_len() {
            return Err(arg(format!("vector of length {} for a model expecting {}", x.len(), self.vector_len())));
        }
        Ok(self.ensemble.score_with(|f| x[f]))
    }
}
