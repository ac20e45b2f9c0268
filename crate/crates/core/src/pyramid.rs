//! Power-law channel scaling and octave-anchored fast feature pyramids.
//!
//! Channel statistics of a resampled image follow `mu(s) ~ s^-lambda` per
//! channel group, so a level at scale `s` can be approximated from an exactly
//! computed anchor at `s_a` as `resample(C_a) * (s / s_a)^-lambda`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::aggregate::{post_smooth, AggregatedStack, WindowSpec};
use crate::channels::ChannelStack;
use crate::error::{arg, Error, Result};
use crate::features::{compute_pooled, ChannelConfig, ChannelGroup};
use crate::imaging::{resample, resample_plane, scaled_dim, RasterImage};
use crate::par;

/// Smallest total sum of squares used as the R² denominator, per sample, in
/// log units. Keeps R² meaningful for groups whose statistics barely move.
pub const R2_FLOOR_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEntry {
    pub group: ChannelGroup,
    pub lambda: f64,
    pub r2: f64,
}

/// Fitted power-law exponent per channel group.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LambdaTable {
    pub entries: Vec<LambdaEntry>,
}

impl LambdaTable {
    /// All groups with exponent 0 (no scaling correction).
    pub fn zero() -> Self {
        Self {
            entries: ChannelGroup::ALL.iter().map(|&group| LambdaEntry { group, lambda: 0.0, r2: 1.0 }).collect(),
        }
    }

    pub fn get(&self, group: ChannelGroup) -> Option<&LambdaEntry> {
        self.entries.iter().find(|e| e.group == group)
    }

    /// Exponent for `group`, 0 when absent.
    pub fn lambda(&self, group: ChannelGroup) -> f64 {
        self.get(group).map_or(0.0, |e| e.lambda)
    }
}

/// Mean absolute channel value per group, indexed by [`ChannelGroup::index`].
/// Groups without channels report `None`.
pub fn group_means(stack: &ChannelStack, groups: &[ChannelGroup]) -> [Option<f64>; 5] {
    let mut sum = [0.0f64; 5];
    let mut count = [0usize; 5];
    for (i, g) in groups.iter().enumerate() {
        sum[g.index()] += stack.channel(i).iter().map(|v| v.abs()).sum::<f64>();
        count[g.index()] += stack.channel(i).len();
    }
    let mut out = [None; 5];
    for g in 0..5 {
        if count[g] > 0 {
            out[g] = Some(sum[g] / count[g] as f64);
        }
    }
    out
}

/// Per-scale group statistics gathered by [`calibrate_lambda`].
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationData {
    pub scales: Vec<f64>,
    /// `means[scale][group]`, averaged over images.
    pub means: Vec<[Option<f64>; 5]>,
}

/// Average group statistics of `images` resampled to each of `scales`.
pub fn calibration_data(images: &[RasterImage], scales: &[f64], cfg: &ChannelConfig) -> Result<CalibrationData> {
    if images.len() < 8 {
        return Err(arg(format!("calibration needs at least 8 images, got {}", images.len())));
    }
    if scales.len() < 3 || scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(arg("calibration needs at least 3 positive scales"));
    }
    let max = scales.iter().cloned().fold(f64::MIN, f64::max);
    let min = scales.iter().cloned().fold(f64::MAX, f64::min);
    if max / min < 2.0 - 1e-12 {
        return Err(arg("calibration scales must span at least one octave"));
    }
    let groups = cfg.channel_groups();
    let jobs = images.len() * scales.len();
    let per_job = par::map_range(jobs, |t| -> Result<[Option<f64>; 5]> {
        let (i, k) = (t / scales.len(), t % scales.len());
        let img = resample(&images[i], scales[k])?;
        Ok(group_means(&compute_pooled(&img, cfg)?, &groups))
    });
    let mut means = vec![[None; 5]; scales.len()];
    for (t, m) in per_job.into_iter().enumerate() {
        let m = m?;
        let k = t % scales.len();
        for g in 0..5 {
            if let Some(v) = m[g] {
                means[k][g] = Some(means[k][g].unwrap_or(0.0) + v / images.len() as f64);
            }
        }
    }
    Ok(CalibrationData { scales: scales.to_vec(), means })
}

/// Least-squares fit of `log mu_s = -lambda log s + c` per group, with R².
pub fn fit_lambda(data: &CalibrationData) -> Result<LambdaTable> {
    let mut entries = Vec::new();
    for group in ChannelGroup::ALL {
        let g = group.index();
        if data.means.iter().all(|m| m[g].is_none()) {
            continue;
        }
        let mu: Vec<f64> = data.means.iter().map(|m| m[g].unwrap_or(0.0)).collect();
        if mu.iter().all(|&v| v == 0.0) {
            return Err(Error::Calibration {
                group: group.name().to_string(),
                reason: "channel statistics are zero at every scale".to_string(),
            });
        }
        if let Some(k) = mu.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Calibration {
                group: group.name().to_string(),
                reason: format!("channel statistics vanish at scale {}", data.scales[k]),
            });
        }
        let x: Vec<f64> = data.scales.iter().map(|&s| libm::log(s)).collect();
        let y: Vec<f64> = mu.iter().map(|&v| libm::log(v)).collect();
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
        let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| {
            let r = b - (my + slope * (a - mx));
            r * r
        })
        .sum();
        let r2 = 1.0 - ss_res / ss_tot.max(n * R2_FLOOR_STD * R2_FLOOR_STD);
        entries.push(LambdaEntry { group, lambda: -slope, r2 });
    }
    Ok(LambdaTable { entries })
}

/// Estimate the power-law exponent of every channel group from `images`.
pub fn calibrate_lambda(images: &[RasterImage], scales: &[f64], cfg: &ChannelConfig) -> Result<LambdaTable> {
    fit_lambda(&calibration_data(images, scales, cfg)?)
}

/// Sampling of the scale axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PyramidParams {
    pub n_per_oct: usize,
    /// Octaves below scale 1.
    pub n_octaves: usize,
    /// Octaves above scale 1.
    pub n_octaves_up: usize,
    /// Approximate non-anchor levels; `false` computes every level exactly.
    pub approximate: bool,
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self { n_per_oct: 8, n_octaves: 4, n_octaves_up: 0, approximate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PyramidLevel {
    /// Nominal scale `2^(-i / n_per_oct)`.
    pub scale: f64,
    /// Actual horizontal and vertical scale of the level raster.
    pub scale_x: f64,
    pub scale_y: f64,
    pub agg: AggregatedStack,
    pub approximated: bool,
    /// Index of the exact level this one was derived from.
    pub anchor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    pub levels: Vec<PyramidLevel>,
    /// Set when the window does not fit even at the finest scale.
    pub window_too_large: bool,
}

fn level_scale(i: isize, n: usize) -> f64 {
    if i % n as isize == 0 {
        libm::exp2(-((i / n as isize) as f64))
    } else {
        libm::exp2(-(i as f64) / n as f64)
    }
}

/// Channel pyramid of `img` for scanning with `window`.
pub fn build_pyramid(
    img: &RasterImage,
    cfg: &ChannelConfig,
    table: &LambdaTable,
    params: PyramidParams,
    window: &WindowSpec,
) -> Result<Pyramid> {
    if params.n_per_oct < 1 {
        return Err(arg("n_per_oct must be at least 1"));
    }
    if window.shrink != cfg.shrink {
        return Err(arg("window and channel configuration disagree on shrink"));
    }
    let n = params.n_per_oct as isize;
    let (w, h) = (img.width(), img.height());
    let fits = |s: f64| scaled_dim(w, s) >= window.width && scaled_dim(h, s) >= window.height;
    let first = -(params.n_octaves_up as isize) * n;
    let last = params.n_octaves as isize * n;
    let indices: Vec<isize> = (first..last).filter(|&i| fits(level_scale(i, params.n_per_oct))).collect();
    if indices.is_empty() {
        return Ok(Pyramid { levels: Vec::new(), window_too_large: true });
    }

    let is_exact = |i: isize| !params.approximate || i % n == 0;
    let anchor_of = |i: isize| i.div_euclid(n) * n;
    let groups = cfg.channel_groups();

    // exact levels first
    let exact: Vec<isize> = indices.iter().copied().filter(|&i| is_exact(i)).collect();
    let pooled = par::map_range(exact.len(), |t| -> Result<ChannelStack> {
        let s = level_scale(exact[t], params.n_per_oct);
        let (lw, lh) = (scaled_dim(w, s), scaled_dim(h, s));
        compute_pooled(&crate::imaging::resample_to(img, lw, lh)?, cfg)
    });
    let pooled: Vec<ChannelStack> = pooled.into_iter().collect::<Result<_>>()?;

    let levels = par::map_range(indices.len(), |t| {
        let i = indices[t];
        let s = level_scale(i, params.n_per_oct);
        let (lw, lh) = (scaled_dim(w, s), scaled_dim(h, s));
        let (scale_x, scale_y) = (lw as f64 / w as f64, lh as f64 / h as f64);
        if let Some(e) = exact.iter().position(|&x| x == i) {
            return PyramidLevel {
                scale: s,
                scale_x,
                scale_y,
                agg: post_smooth(pooled[e].clone(), cfg.shrink),
                approximated: false,
                anchor: None,
            };
        }
        let a = anchor_of(i);
        let e = exact.iter().position(|&x| x == a).expect("anchor computed");
        let src = &pooled[e];
        let ratio = s / level_scale(a, params.n_per_oct);
        let (cw, ch) = (lw / cfg.shrink, lh / cfg.shrink);
        let mut data = Vec::with_capacity(cw * ch * src.len());
        for (c, g) in groups.iter().enumerate() {
            let factor = libm::pow(ratio, -table.lambda(*g));
            let plane = resample_plane(src.channel(c), src.width(), src.height(), cw, ch);
            data.extend(plane.into_iter().map(|v| v * factor));
        }
        let approx = ChannelStack::from_parts(cw, ch, src.names().to_vec(), data);
        PyramidLevel {
            scale: s,
            scale_x,
            scale_y,
            agg: post_smooth(approx, cfg.shrink),
            approximated: true,
            anchor: indices.iter().position(|&x| x == a),
        }
    });
    Ok(Pyramid { levels, window_too_large: false })
}
