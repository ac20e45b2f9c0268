//! Staged detector training: positives with mirror copies, random negatives,
//! then hard negatives mined with the previous stage's detector.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adaboost::{balanced_weights, boost_with, exp_loss, BoostedModel, Ensemble, FeatureSampling, Score};
use super::quantize::QuantizedSet;
use crate::aggregate::{window_vector, AggregatedStack, WindowSpec};
use crate::detector::{scan_stack, window_box, DetectParams};
use crate::error::{arg, Error, Result};
use crate::features::{compute_aggregated, ChannelConfig};
use crate::geometry::Rect;
use crate::imaging::{sample_grid, RasterImage};
use crate::par;
use crate::pyramid::{build_pyramid, LambdaTable};

/// Image that contributes negative windows; windows whose object box has IoU
/// of at least the exclusion threshold with any listed box are never used.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeImage {
    pub image: RasterImage,
    pub exclusions: Vec<Rect>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    /// Weak-learner count of each stage; strictly increasing.
    pub schedule: Vec<usize>,
    pub n_random_negatives: usize,
    /// Hard negatives added per mining stage.
    pub hard_negative_cap: usize,
    /// Negatives kept across stages; the oldest are dropped first.
    pub max_negatives: usize,
    /// Hard negatives taken from any single image.
    pub negatives_per_image: usize,
    pub exclusion_iou: f64,
    /// Cascade margin as a fraction of the first tree weight.
    pub cascade_margin: f64,
    /// Cascade thresholds are calibrated on the positives plus their windows
    /// displaced by up to this many cells, so that slightly misaligned
    /// objects survive the cascade.
    pub calibration_shift: usize,
    /// Fraction of features each tree may split on; 1 disables sampling.
    pub feature_fraction: f64,
    /// Scanning parameters used for sampling and mining negatives.
    pub mining: DetectParams,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            schedule: alloc::vec![32, 128, 512, 2048],
            n_random_negatives: 5000,
            hard_negative_cap: 5000,
            max_negatives: 10000,
            negatives_per_image: 25,
            exclusion_iou: 0.3,
            cascade_margin: 0.1,
            calibration_shift: 1,
            feature_fraction: 0.0625,
            mining: DetectParams::default(),
            seed: 0,
        }
    }
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.schedule.is_empty() || self.schedule[0] == 0 || self.schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(arg(format!("schedule {:?} must be positive and strictly increasing", self.schedule)));
        }
        if self.n_random_negatives == 0 || self.max_negatives == 0 || self.negatives_per_image == 0 {
            return Err(arg("negative sample counts must be positive"));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(arg(format!("feature fraction {} must lie in (0, 1]", self.feature_fraction)));
        }
        if !(self.cascade_margin >= 0.0) {
            return Err(arg("cascade margin must be non-negative"));
        }
        Ok(())
    }
}

/// Per-stage training summary.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: usize,
    pub weak_count: usize,
    pub skipped: bool,
    pub positives: usize,
    pub negatives: usize,
    pub mined: usize,
    pub first_error: f64,
    pub last_error: f64,
    /// Exponential loss of the new stage on its own training set.
    pub loss: f64,
    /// Exponential loss of the previous stage's model on the same set.
    pub previous_loss: Option<f64>,
    pub train_error: f64,
    pub stopped_early: Option<String>,
}

/// Context pixels around the window in positive crops.
pub fn crop_padding(cfg: &ChannelConfig) -> usize {
    cfg.support()
}

/// Crop around `truth`, resampled so the truth box fills the window's object
/// box (matching area), with [`crop_padding`] pixels of context on each side.
pub fn positive_crop(img: &RasterImage, truth: &Rect, window: &WindowSpec, cfg: &ChannelConfig) -> Result<RasterImage> {
    if !(truth.w > 0.0 && truth.h > 0.0) {
        return Err(arg("positive box must have positive size"));
    }
    let pad = crop_padding(cfg);
    let k = libm::sqrt((window.object_width * window.object_height) as f64 / (truth.w * truth.h));
    let (cx, cy) = truth.center();
    sample_grid(img, cx, cy, window.width + 2 * pad, window.height + 2 * pad, 1.0 / k)
}

fn check_crop(crop: &RasterImage, window: &WindowSpec, cfg: &ChannelConfig) -> Result<usize> {
    let pad = crop_padding(cfg);
    if crop.width() != window.width + 2 * pad || crop.height() != window.height + 2 * pad {
        return Err(arg(format!(
            "positive crop is {}x{}, expected {}x{}",
            crop.width(),
            crop.height(),
            window.width + 2 * pad,
            window.height + 2 * pad
        )));
    }
    Ok(pad / cfg.shrink)
}

/// Window vector of a positive crop produced by [`positive_crop`].
pub fn crop_vector(crop: &RasterImage, window: &WindowSpec, cfg: &ChannelConfig) -> Result<Vec<f32>> {
    let c = check_crop(crop, window, cfg)?;
    let agg = compute_aggregated(crop, cfg)?;
    window_vector(&agg, window, (c, c))
}

/// Positive vectors of `crops` followed by those of their mirror images.
pub fn positive_vectors(crops: &[RasterImage], window: &WindowSpec, cfg: &ChannelConfig) -> Result<Vec<Vec<f32>>> {
    Ok(positive_sets(crops, window, cfg, 0)?.into_iter().map(|p| p.window(0, 0)).collect())
}

/// Cells of a window grown by `shift` on every side, channel-major like
/// [`window_vector`]; holds every window displaced by up to `shift` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    shift: usize,
    cells_w: usize,
    cells_h: usize,
    data: Vec<f32>,
}

impl Patch {
    fn extract(agg: &AggregatedStack, window: &WindowSpec, center: usize, shift: usize) -> Self {
        let (cw, ch) = (window.cells_w() + 2 * shift, window.cells_h() + 2 * shift);
        let (o, stride) = (center - shift, agg.width());
        let mut data = Vec::with_capacity(cw * ch * agg.channels());
        for c in 0..agg.channels() {
            let plane = agg.stack.channel(c);
            for y in o..o + ch {
                data.extend(plane[y * stride + o..y * stride + o + cw].iter().map(|&x| x as f32));
            }
        }
        Self { shift, cells_w: window.cells_w(), cells_h: window.cells_h(), data }
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Window vector displaced by `(dx, dy)` cells, each in `-shift..=shift`.
    pub fn window(&self, dx: isize, dy: isize) -> Vec<f32> {
        let s = self.shift as isize;
        assert!(dx.abs() <= s && dy.abs() <= s, "displacement beyond the patch");
        let (pw, ph) = (self.cells_w + 2 * self.shift, self.cells_h + 2 * self.shift);
        let (ox, oy) = ((dx + s) as usize, (dy + s) as usize);
        let mut v = Vec::with_capacity(self.cells_w * self.cells_h * self.data.len() / (pw * ph));
        for plane in self.data.chunks_exact(pw * ph) {
            for y in oy..oy + self.cells_h {
                v.extend_from_slice(&plane[y * pw + ox..y * pw + ox + self.cells_w]);
            }
        }
        v
    }

    /// All windows of the patch, the centered one first.
    pub fn windows(&self) -> impl Iterator<Item = Vec<f32>> + '_ {
        let s = self.shift as isize;
        let offsets = (-s..=s).flat_map(move |dy| (-s..=s).map(move |dx| (dx, dy))).filter(|&o| o != (0, 0));
        core::iter::once((0, 0)).chain(offsets).map(|(dx, dy)| self.window(dx, dy))
    }
}

/// Patches of `crops` followed by those of their mirror images.
pub fn positive_sets(crops: &[RasterImage], window: &WindowSpec, cfg: &ChannelConfig, shift: usize) -> Result<Vec<Patch>> {
    let n = crops.len();
    let patches = par::map_range(2 * n, |i| {
        let crop = if i < n { crops[i].clone() } else { crops[i - n].flip_horizontal() };
        let c = check_crop(&crop, window, cfg)?;
        if shift > c {
            return Err(arg(format!("shift of {shift} cells exceeds the crop padding of {c} cells")));
        }
        let agg = compute_aggregated(&crop, cfg)?;
        Ok(Patch::extract(&agg, window, c, shift))
    });
    patches.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    score: f64,
    image: usize,
    level: usize,
    cx: usize,
    cy: usize,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.image.cmp(&b.image))
        .then(a.level.cmp(&b.level))
        .then(a.cy.cmp(&b.cy))
        .then(a.cx.cmp(&b.cx))
}

fn image_seed(seed: u64, image: usize) -> u64 {
    seed ^ (image as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn excluded(rect: &Rect, exclusions: &[Rect], iou: f64) -> bool {
    exclusions.iter().any(|e| rect.iou(e) >= iou)
}

/// Windows of one negative image: `quota` random ones when `model` is
/// `None`, otherwise the top-scoring accepted ones (at most `quota`).
fn negatives_from_image(
    neg: &NegativeImage,
    index: usize,
    model: Option<&BoostedModel>,
    window: &WindowSpec,
    cfg: &ChannelConfig,
    lambda: &LambdaTable,
    params: &TrainParams,
    quota: usize,
) -> Result<Vec<(Candidate, Vec<f32>)>> {
    let pyramid = build_pyramid(&neg.image, cfg, lambda, params.mining.pyramid, window)?;
    let stride = params.mining.stride_cells.max(1);
    let mut picked: Vec<Candidate> = Vec::new();
    match model {
        None => {
            let mut all = Vec::new();
            for (li, level) in pyramid.levels.iter().enumerate() {
                let (w, h) = (level.agg.width(), level.agg.height());
                let (cw, ch) = (window.cells_w(), window.cells_h());
                for cy in (0..=h - ch).step_by(stride) {
                    for cx in (0..=w - cw).step_by(stride) {
                        let r = window_box(window, level, (cx, cy));
                        if !excluded(&r, &neg.exclusions, params.exclusion_iou) {
                            all.push(Candidate { score: 0.0, image: index, level: li, cx, cy });
                        }
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(image_seed(params.seed, index));
            let take = quota.min(all.len());
            let (chosen, _) = all.partial_shuffle(&mut rng, take);
            picked.extend_from_slice(chosen);
        }
        Some(m) => {
            for (li, level) in pyramid.levels.iter().enumerate() {
                scan_stack(m, &level.agg, stride, |(cx, cy), score| {
                    if let Score::Accepted(s) = score {
                        if s > params.mining.score_threshold {
                            let r = window_box(window, level, (cx, cy));
                            if !excluded(&r, &neg.exclusions, params.exclusion_iou) {
                                picked.push(Candidate { score: s, image: index, level: li, cx, cy });
                            }
                        }
                    }
                });
            }
            picked.sort_by(candidate_order);
            picked.truncate(quota);
        }
    }
    picked
        .into_iter()
        .map(|c| Ok((c, window_vector(&pyramid.levels[c.level].agg, window, (c.cx, c.cy))?)))
        .collect()
}

fn collect_negatives(
    pool: &[NegativeImage],
    model: Option<&BoostedModel>,
    window: &WindowSpec,
    cfg: &ChannelConfig,
    lambda: &LambdaTable,
    params: &TrainParams,
    per_image: usize,
    cap: usize,
) -> Result<Vec<Vec<f32>>> {
    let mut all = Vec::new();
    for chunk_start in (0..pool.len()).step_by(par::width()) {
        let end = (chunk_start + par::width()).min(pool.len());
        let found = par::map_range(end - chunk_start, |i| {
            let idx = chunk_start + i;
            negatives_from_image(&pool[idx], idx, model, window, cfg, lambda, params, per_image)
        });
        for f in found {
            all.extend(f?);
        }
    }
    if model.is_some() {
        all.sort_by(|a, b| candidate_order(&a.0, &b.0));
    }
    all.truncate(cap);
    Ok(all.into_iter().map(|(_, v)| v).collect())
}

/// Train a boosted detector in stages following `params.schedule`.
///
/// `positives` are crops from [`positive_crop`]; each contributes itself and
/// its mirror image. Stage 0 uses random negative windows; every later stage
/// adds hard negatives mined with the previous model, retrains from scratch
/// with that stage's weak-learner count and recalibrates the cascade. A
/// stage that mines nothing is skipped.
pub fn train_detector(
    positives: &[RasterImage],
    negative_pool: &[NegativeImage],
    cfg: &ChannelConfig,
    window: &WindowSpec,
    lambda: &LambdaTable,
    params: &TrainParams,
) -> Result<(BoostedModel, Vec<StageReport>)> {
    params.validate()?;
    window.validate()?;
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::DegenerateData("no positive samples".into()));
    }
    if negative_pool.is_empty() {
        return Err(Error::DegenerateData("no negative images".into()));
    }
    let patches = positive_sets(positives, window, cfg, params.calibration_shift)?;
    let pos: Vec<Vec<f32>> = patches.iter().map(|p| p.window(0, 0)).collect();
    let per_image = params.n_random_negatives.div_ceil(negative_pool.len());
    let mut negs = collect_negatives(negative_pool, None, window, cfg, lambda, params, per_image, params.n_random_negatives)?;
    if negs.is_empty() {
        return Err(Error::DegenerateData("negative images contain no usable windows".into()));
    }

    let mut model: Option<BoostedModel> = None;
    let mut reports = Vec::new();
    for (stage, &weak_count) in params.schedule.iter().enumerate() {
        let mut mined = 0;
        if let Some(prev) = &model {
            let hard = collect_negatives(
                negative_pool,
                Some(prev),
                window,
                cfg,
                lambda,
                params,
                params.negatives_per_image,
                params.hard_negative_cap,
            )?;
            mined = hard.len();
            if mined == 0 {
                reports.push(StageReport {
                    stage,
                    weak_count,
                    skipped: true,
                    positives: pos.len(),
                    negatives: negs.len(),
                    mined: 0,
                    first_error: f64::NAN,
                    last_error: f64::NAN,
                    loss: f64::NAN,
                    previous_loss: None,
                    train_error: f64::NAN,
                    stopped_early: Some("no hard negatives found".into()),
                });
                continue;
            }
            negs.extend(hard);
            if negs.len() > params.max_negatives {
                negs.drain(..negs.len() - params.max_negatives);
            }
        }

        let rows: Vec<&[f32]> = pos.iter().chain(negs.iter()).map(|v| v.as_slice()).collect();
        let labels: Vec<i8> = (0..rows.len()).map(|i| if i < pos.len() { 1 } else { -1 }).collect();
        let data = QuantizedSet::from_rows(&rows)?;
        let w0 = balanced_weights(&labels)?;
        let previous_loss = model.as_ref().map(|m| {
            let margins: Vec<f64> = rows.iter().map(|r| m.ensemble.score_full(|f| r[f])).collect();
            exp_loss(&margins, &labels, &w0)
        });
        drop(rows);
        let sampling = FeatureSampling { fraction: params.feature_fraction, seed: image_seed(params.seed, usize::MAX - stage) };
        let outcome = boost_with(&data, &labels, w0, weak_count, Some(sampling))?;
        let mut ensemble: Ensemble = outcome.ensemble;
        let margin = params.cascade_margin * ensemble.alphas().first().copied().unwrap_or(0.0);
        ensemble.calibrate_cascade(patches.iter().flat_map(|p| p.windows()), params.mining.score_threshold, margin);
        let last = outcome.rounds.last().copied();
        reports.push(StageReport {
            stage,
            weak_count,
            skipped: false,
            positives: pos.len(),
            negatives: negs.len(),
            mined,
            first_error: outcome.rounds.first().map_or(f64::NAN, |r| r.error),
            last_error: last.map_or(f64::NAN, |r| r.error),
            loss: last.map_or(f64::NAN, |r| r.loss),
            previous_loss,
            train_error: last.map_or(f64::NAN, |r| r.train_error),
            stopped_early: outcome.stopped_early,
        });
        model = Some(BoostedModel::new(ensemble, *window, cfg.clone(), lambda.clone())?);
    }
    let model = model.expect("stage 0 always trains");
    Ok((model, reports))
}
