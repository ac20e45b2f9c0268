//! Per-feature quantile thresholds and 8-bit bin codes.

use alloc::vec::Vec;

use crate::error::{arg, Result};
use crate::par;

/// Maximum number of thresholds per feature.
pub const MAX_THRESHOLDS: usize = 255;

/// Training vectors coded as bins, stored feature-major.
///
/// `bin(x)` is the number of thresholds `t` with `t <= x`, so `x < t_b`
/// exactly when `bin(x) <= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSet {
    n_samples: usize,
    n_features: usize,
    bins: Vec<u8>,
    thresholds: Vec<Vec<f32>>,
}

impl QuantizedSet {
    /// Quantize row vectors of equal length.
    pub fn from_rows<R: AsRef<[f32]> + Sync>(rows: &[R]) -> Result<Self> {
        let rows: Vec<&[f32]> = rows.iter().map(|r| r.as_ref()).collect();
        let n_samples = rows.len();
        let n_features = rows.first().map_or(0, |r| r.len());
        if n_samples == 0 || n_features == 0 {
            return Err(arg("cannot quantize an empty sample set"));
        }
        if rows.iter().any(|r| r.len() != n_features) {
            return Err(arg("feature vectors differ in length"));
        }
        if rows.iter().any(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(arg("feature vectors must be finite"));
        }
        let columns = par::map_range(n_features, |f| {
            let column: Vec<f32> = rows.iter().map(|r| r[f]).collect();
            let thresholds = thresholds_for(&column);
            let bins: Vec<u8> = column.iter().map(|&x| bin_of(&thresholds, x)).collect();
            (thresholds, bins)
        });
        let mut bins = Vec::with_capacity(n_samples * n_features);
        let mut thresholds = Vec::with_capacity(n_features);
        for (t, b) in columns {
            thresholds.push(t);
            bins.extend(b);
        }
        Ok(Self { n_samples, n_features, bins, thresholds })
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Bin codes of feature `f` for every sample.
    pub fn column(&self, f: usize) -> &[u8] {
        &self.bins[f * self.n_samples..(f + 1) * self.n_samples]
    }

    pub fn thresholds(&self, f: usize) -> &[f32] {
        &self.thresholds[f]
    }

    pub fn bin(&self, sample: usize, f: usize) -> u8 {
        self.bins[f * self.n_samples + sample]
    }
}

#[inline]
fn bin_of(thresholds: &[f32], x: f32) -> u8 {
    thresholds.partition_point(|&t| t <= x) as u8
}

/// Midpoints between distinct values when there are few of them, otherwise
/// values at evenly spaced ranks. Strictly increasing and strictly above the
/// column minimum.
fn thresholds_for(column: &[f32]) -> Vec<f32> {
    let mut sorted = column.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut distinct = sorted.clone();
    distinct.dedup();
    let mut out = Vec::new();
    if distinct.len() <= MAX_THRESHOLDS + 1 {
        for w in distinct.windows(2) {
            let mid = w[0] + (w[1] - w[0]) / 2.0;
            out.push(if mid > w[0] && mid <= w[1] { mid } else { w[1] });
        }
    } else {
        let n = sorted.len();
        for i in 1..=MAX_THRESHOLDS {
            let t = sorted[i * n / (MAX_THRESHOLDS + 1)];
            if t > sorted[0] && out.last().is_none_or(|&l| t > l) {
                out.push(t);
            }
        }
    }
    out
}
