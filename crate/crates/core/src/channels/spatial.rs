//! Color channels and the locally normalized gradient-magnitude channel.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ChannelStack;
use crate::error::Result;
use crate::filter;
use crate::imaging::{plane_gradients, smooth, to_color_space, ColorSpace, RasterImage};

/// Pre-smoothing applied before differentiation.
pub const GRADIENT_PRESMOOTH_RADIUS: usize = 1;
/// Radius of the triangular normalization kernel.
pub const NORMALIZATION_RADIUS: usize = 5;
/// Additive constant in `M / (S(M) + eps)`.
pub const NORMALIZATION_EPS: f64 = 0.005;

/// Name of the gradient-magnitude channel.
pub const GRADIENT_MAGNITUDE: &str = "GM";

/// One channel per color component, named `<space>_<component>`.
pub fn color_channels(img: &RasterImage, space: ColorSpace) -> Result<ChannelStack> {
    let converted = to_color_space(img, space)?;
    let mut stack = ChannelStack::new(img.width(), img.height());
    let names = space.component_names();
    for c in 0..converted.channels() {
        stack.push(format!("{space}_{}", names[c]), converted.plane(c).to_vec())?;
    }
    Ok(stack)
}

/// Per-pixel maximum over channels of `sqrt(dx^2 + dy^2)` after smoothing
/// the input with a binomial filter of `presmooth` radius.
pub fn max_gradient_magnitude(img: &RasterImage, presmooth: usize) -> Vec<f64> {
    let img = smooth(img, presmooth);
    let (w, h) = (img.width(), img.height());
    let mut mag = vec![0.0f64; w * h];
    for c in 0..img.channels() {
        let g = plane_gradients(img.plane(c), w, h);
        for (m, (dx, dy)) in mag.iter_mut().zip(g.dx.iter().zip(&g.dy)) {
            *m = m.max(libm::sqrt(dx * dx + dy * dy));
        }
    }
    mag
}

/// Divide a magnitude plane by its triangular local average plus `eps`.
pub fn normalize_magnitude(mag: &[f64], width: usize, height: usize, radius: usize, eps: f64) -> Vec<f64> {
    let local = filter::convolve_separable(mag, width, height, &filter::triangle_kernel(radius));
    mag.iter().zip(&local).map(|(m, s)| m / (s + eps)).collect()
}

/// Locally normalized maximum gradient magnitude (one channel, `GM`).
pub fn gradient_magnitude(img: &RasterImage) -> Result<ChannelStack> {
    let mag = max_gradient_magnitude(img, GRADIENT_PRESMOOTH_RADIUS);
    let norm = normalize_magnitude(&mag, img.width(), img.height(), NORMALIZATION_RADIUS, NORMALIZATION_EPS);
    let mut stack = ChannelStack::new(img.width(), img.height());
    stack.push(GRADIENT_MAGNITUDE, norm)?;
    Ok(stack)
}
