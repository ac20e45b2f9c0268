//! Detection matching and precision/recall metrics.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::detector::{detection_order, Detection};
use crate::error::{arg, Result};
use crate::geometry::Rect;

/// Default IoU a detection must exceed to count as a true positive.
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

/// Ground-truth box.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedBox {
    pub image_id: String,
    pub rect: Rect,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// Per input detection: matched a truth.
    pub true_positive: Vec<bool>,
    /// Per truth: matched by some detection.
    pub truth_matched: Vec<bool>,
}

impl MatchResult {
    pub fn false_negatives(&self) -> usize {
        self.truth_matched.iter().filter(|m| !**m).count()
    }
}

/// Greedy matching in detection order: each detection takes the unmatched
/// truth of highest IoU, provided that IoU exceeds `iou_threshold`.
pub fn match_detections(dets: &[Detection], truths: &[Rect], iou_threshold: f64) -> Result<MatchResult> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(arg("IoU threshold must lie in (0, 1)"));
    }
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| detection_order(&dets[a], &dets[b]));
    let mut true_positive = vec![false; dets.len()];
    let mut truth_matched = vec![false; truths.len()];
    for i in order {
        let mut best: Option<(usize, f64)> = None;
        for (t, truth) in truths.iter().enumerate() {
            if truth_matched[t] {
                continue;
            }
            let iou = dets[i].rect.iou(truth);
            if iou > iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((t, iou));
            }
        }
        if let Some((t, _)) = best {
            truth_matched[t] = true;
            true_positive[i] = true;
        }
    }
    Ok(MatchResult { true_positive, truth_matched })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    /// Detections with score at or above this are counted.
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision/recall curve with summary numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    /// One point per distinct score, in decreasing threshold order.
    pub points: Vec<PrPoint>,
    /// Area under the precision envelope (all-points interpolation).
    pub ap: f64,
    /// Recall at the F1-maximizing point.
    pub ar: f64,
    /// F1 at the F1-maximizing point.
    pub af: f64,
    /// Set when there were no detections and precision is undefined.
    pub no_detections: bool,
}

impl PrCurve {
    /// Precision envelope: `max` precision at any point of equal or higher recall.
    pub fn envelope(&self) -> Vec<f64> {
        let mut env: Vec<f64> = self.points.iter().map(|p| p.precision).collect();
        for i in (0..env.len().saturating_sub(1)).rev() {
            env[i] = env[i].max(env[i + 1]);
        }
        env
    }
}

/// Metrics from `(score, is_true_positive)` pairs and the number of truths.
pub fn pr_metrics(flags: &[(f64, bool)], n_truths: usize) -> Result<PrCurve> {
    if n_truths == 0 {
        return Err(arg("precision/recall needs at least one ground-truth box"));
    }
    if flags.iter().any(|(s, _)| s.is_nan()) {
        return Err(arg("detection scores must not be NaN"));
    }
    if flags.is_empty() {
        return Ok(PrCurve { points: Vec::new(), ap: 0.0, ar: 0.0, af: 0.0, no_detections: true });
    }
    let mut sorted = flags.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold: s,
            recall: tp as f64 / n_truths as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    let mut curve = PrCurve { points, ap: 0.0, ar: 0.0, af: 0.0, no_detections: false };
    let env = curve.envelope();
    let mut prev_recall = 0.0;
    for (p, e) in curve.points.iter().zip(&env) {
        curve.ap += (p.recall - prev_recall) * e;
        prev_recall = p.recall;
    }
    for p in &curve.points {
        let f1 = if p.precision + p.recall > 0.0 { 2.0 * p.precision * p.recall / (p.precision + p.recall) } else { 0.0 };
        if f1 > curve.af {
            curve.af = f1;
            curve.ar = p.recall;
        }
    }
    Ok(curve)
}

/// Match each image's detections against its truths and pool the results.
pub fn evaluate(images: &[(Vec<Detection>, Vec<Rect>)], iou_threshold: f64) -> Result<PrCurve> {
    let mut flags = Vec::new();
    let mut n_truths = 0;
    for (dets, truths) in images {
        let m = match_detections(dets, truths, iou_threshold)?;
        flags.extend(dets.iter().zip(&m.true_positive).map(|(d, &tp)| (d.score, tp)));
        n_truths += truths.len();
    }
    pr_metrics(&flags, n_truths)
}
