//! Sliding-window scanning over the channel pyramid and overlap suppression.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::aggregate::{AggregatedStack, WindowSpec};
use crate::boosting::{BoostedModel, Score};
use crate::error::{arg, Result};
use crate::geometry::Rect;
use crate::imaging::RasterImage;
use crate::par;
use crate::pyramid::{build_pyramid, PyramidLevel, PyramidParams};

/// Default IoU above which the weaker of two boxes is suppressed.
pub const DEFAULT_OVERLAP: f64 = 0.5;
/// Default fraction of a box's area that, when covered by a stronger box,
/// removes it in the second suppression step.
pub const DEFAULT_CONTAINMENT: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    /// Object box in original-image pixels.
    pub rect: Rect,
    pub score: f64,
    /// Pyramid level index.
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectParams {
    pub stride_cells: usize,
    pub score_threshold: f64,
    pub pyramid: PyramidParams,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self { stride_cells: 1, score_threshold: 0.0, pyramid: PyramidParams::default() }
    }
}

/// Offset of every window-vector entry relative to the window's top-left cell
/// in a `width x height` aggregated stack.
pub fn feature_offsets(window: &WindowSpec, channels: usize, width: usize, height: usize) -> Vec<usize> {
    let (cw, ch) = (window.cells_w(), window.cells_h());
    let mut out = Vec::with_capacity(cw * ch * channels);
    for c in 0..channels {
        for r in 0..ch {
            for col in 0..cw {
                out.push(c * width * height + r * width + col);
            }
        }
    }
    out
}

/// Score every window of `agg` at the given cell stride, calling
/// `visit((cx, cy), score)` in row-major order.
pub fn scan_stack(model: &BoostedModel, agg: &AggregatedStack, stride: usize, mut visit: impl FnMut((usize, usize), Score)) {
    let (w, h) = (agg.width(), agg.height());
    let (cw, ch) = (model.window.cells_w(), model.window.cells_h());
    if w < cw || h < ch || stride == 0 {
        return;
    }
    let offsets = feature_offsets(&model.window, agg.channels(), w, h);
    let data = agg.stack.data();
    for cy in (0..=h - ch).step_by(stride) {
        for cx in (0..=w - cw).step_by(stride) {
            let base = cy * w + cx;
            let score = model.ensemble.score_with(|f| data[base + offsets[f]] as f32);
            visit((cx, cy), score);
        }
    }
}

/// Object box of the window at cell `origin` of `level`, in original pixels.
pub fn window_box(window: &WindowSpec, level: &PyramidLevel, origin: (usize, usize)) -> Rect {
    let (ox, oy) = window.object_offset();
    let px = (origin.0 * window.shrink) as f64 + ox;
    let py = (origin.1 * window.shrink) as f64 + oy;
    Rect::new(
        px / level.scale_x,
        py / level.scale_y,
        window.object_width as f64 / level.scale_x,
        window.object_height as f64 / level.scale_y,
    )
}

/// Inverse of [`window_box`]: the cell whose object box starts at `rect`.
pub fn box_cell(window: &WindowSpec, level: &PyramidLevel, rect: &Rect) -> (isize, isize) {
    let (ox, oy) = window.object_offset();
    let cx = (rect.x * level.scale_x - ox) / window.shrink as f64;
    let cy = (rect.y * level.scale_y - oy) / window.shrink as f64;
    (libm::round(cx) as isize, libm::round(cy) as isize)
}

/// Score-descending order; ties by ascending x, then y.
pub fn detection_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.rect.x.total_cmp(&b.rect.x))
        .then(a.rect.y.total_cmp(&b.rect.y))
        .then(a.level.cmp(&b.level))
}

/// All windows accepted by the cascade with score above the threshold,
/// mapped to original coordinates and sorted by [`detection_order`].
pub fn detect(img: &RasterImage, model: &BoostedModel, params: &DetectParams) -> Result<Vec<Detection>> {
    if params.stride_cells < 1 {
        return Err(arg("stride must be at least one cell"));
    }
    model.validate()?;
    let pyramid = build_pyramid(img, &model.channels, &model.lambda, params.pyramid, &model.window)?;
    let (iw, ih) = (img.width() as f64, img.height() as f64);
    let per_level = par::map_range(pyramid.levels.len(), |li| {
        let level = &pyramid.levels[li];
        let mut found = Vec::new();
        scan_stack(model, &level.agg, params.stride_cells, |origin, score| {
            if let Score::Accepted(s) = score {
                if s > params.score_threshold {
                    let rect = window_box(&model.window, level, origin).clamped(iw, ih);
                    if rect.w > 0.0 && rect.h > 0.0 {
                        found.push(Detection { rect, score: s, level: li });
                    }
                }
            }
        });
        found
    });
    let mut dets: Vec<Detection> = per_level.into_iter().flatten().collect();
    dets.sort_by(detection_order);
    Ok(dets)
}

/// Greedy suppression: keep boxes in [`detection_order`], dropping any whose
/// IoU with a kept box exceeds `overlap`.
pub fn nms(dets: &[Detection], overlap: f64) -> Vec<Detection> {
    let mut sorted = dets.to_vec();
    sorted.sort_by(detection_order);
    let mut kept: Vec<Detection> = Vec::new();
    for d in sorted {
        if kept.iter().all(|k| k.rect.iou(&d.rect) <= overlap) {
            kept.push(d);
        }
    }
    kept
}

/// [`nms`] followed by removal of boxes whose area is covered by more than
/// `containment` by a higher-ranked survivor.
pub fn two_step_nms(dets: &[Detection], overlap: f64, containment: f64) -> Vec<Detection> {
    let first = nms(dets, overlap);
    let mut kept: Vec<Detection> = Vec::new();
    for d in first {
        if kept.iter().all(|k| d.rect.covered_by(&k.rect) <= containment) {
            kept.push(d);
        }
    }
    kept
}
