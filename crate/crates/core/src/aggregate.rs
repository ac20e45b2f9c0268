//! Region smoothing, block pooling and window feature vectors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::channels::ChannelStack;
use crate::error::{arg, Result};
use crate::filter;

/// Binomial radius of the smoothing applied after pooling.
pub const POST_SMOOTH_RADIUS: usize = 1;

/// Triangular radius of the region kernel for a given shrink (two cells).
pub fn region_radius(shrink: usize) -> usize {
    2 * shrink
}

/// Pooled channel stack at `1 / shrink` resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedStack {
    pub shrink: usize,
    pub stack: ChannelStack,
}

impl AggregatedStack {
    pub fn width(&self) -> usize {
        self.stack.width()
    }

    pub fn height(&self) -> usize {
        self.stack.height()
    }

    pub fn channels(&self) -> usize {
        self.stack.len()
    }
}

/// Model window in pixels plus the object box it is trained to report.
///
/// The object box is centered in the window; the margin between the two is
/// context the classifier sees but detections do not cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub width: usize,
    pub height: usize,
    pub shrink: usize,
    pub object_width: usize,
    pub object_height: usize,
}

impl WindowSpec {
    pub fn new(width: usize, height: usize, shrink: usize, object_width: usize, object_height: usize) -> Result<Self> {
        let w = Self { width, height, shrink, object_width, object_height };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shrink == 0 || self.width == 0 || self.height == 0 {
            return Err(arg("window dimensions and shrink must be positive"));
        }
        if !self.width.is_multiple_of(self.shrink) || !self.height.is_multiple_of(self.shrink) {
            return Err(arg(format!(
                "window {}x{} is not divisible by shrink {}",
                self.width, self.height, self.shrink
            )));
        }
        if self.object_width == 0
            || self.object_height == 0
            || self.object_width > self.width
            || self.object_height > self.height
        {
            return Err(arg(format!(
                "object box {}x{} must be non-empty and fit in the {}x{} window",
                self.object_width, self.object_height, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn cells_w(&self) -> usize {
        self.width / self.shrink
    }

    pub fn cells_h(&self) -> usize {
        self.height / self.shrink
    }

    /// Length of a window vector over `channels` channels.
    pub fn vector_len(&self, channels: usize) -> usize {
        self.cells_w() * self.cells_h() * channels
    }

    /// Top-left offset of the object box inside the window.
    pub fn object_offset(&self) -> (f64, f64) {
        (
            0.5 * (self.width - self.object_width) as f64,
            0.5 * (self.height - self.object_height) as f64,
        )
    }
}

/// Convolve every channel flagged in `smooth` with a separable triangular
/// kernel of `radius`; other channels pass through unchanged.
pub fn region_convolve(stack: &ChannelStack, radius: usize, smooth: &[bool]) -> Result<ChannelStack> {
    if radius < 1 {
        return Err(arg("region kernel radius must be at least 1"));
    }
    if smooth.len() != stack.len() {
        return Err(arg(format!("{} smoothing flags for {} channels", smooth.len(), stack.len())));
    }
    let kernel = filter::triangle_kernel(radius);
    let (w, h) = (stack.width(), stack.height());
    stack.map_channels(|i, _, plane| {
        if smooth[i] {
            filter::convolve_separable(plane, w, h, &kernel)
        } else {
            plane.to_vec()
        }
    })
}

/// Dimensions of the pooled grid.
pub fn pooled_dims(width: usize, height: usize, shrink: usize) -> (usize, usize) {
    (width / shrink, height / shrink)
}

/// Non-overlapping `shrink x shrink` block means of one plane; trailing
/// rows and columns that do not fill a block are dropped.
pub fn block_mean(plane: &[f64], width: usize, height: usize, shrink: usize) -> Vec<f64> {
    let (cw, ch) = pooled_dims(width, height, shrink);
    let mut out = vec![0.0; cw * ch];
    let norm = 1.0 / (shrink * shrink) as f64;
    for cy in 0..ch {
        for y in cy * shrink..(cy + 1) * shrink {
            let row = &plane[y * width..y * width + cw * shrink];
            for (cx, block) in row.chunks_exact(shrink).enumerate() {
                out[cy * cw + cx] += block.iter().sum::<f64>();
            }
        }
    }
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

/// Block means of every channel, without post-smoothing.
pub fn block_pool(stack: &ChannelStack, shrink: usize) -> Result<ChannelStack> {
    check_shrink(stack.width(), stack.height(), shrink)?;
    let (cw, ch) = pooled_dims(stack.width(), stack.height(), shrink);
    let mut data = Vec::with_capacity(cw * ch * stack.len());
    for i in 0..stack.len() {
        data.extend(block_mean(stack.channel(i), stack.width(), stack.height(), shrink));
    }
    Ok(ChannelStack::from_parts(cw, ch, stack.names().to_vec(), data))
}

pub(crate) fn check_shrink(width: usize, height: usize, shrink: usize) -> Result<()> {
    if shrink == 0 {
        return Err(arg("shrink must be positive"));
    }
    if width < shrink || height < shrink {
        return Err(arg(format!("{width}x{height} channels are smaller than shrink {shrink}")));
    }
    Ok(())
}

/// Binomial post-smoothing of an already pooled stack.
pub fn post_smooth(pooled: ChannelStack, shrink: usize) -> AggregatedStack {
    let kernel = filter::binomial_kernel(POST_SMOOTH_RADIUS);
    let (w, h) = (pooled.width(), pooled.height());
    let stack = pooled
        .map_channels(|_, _, plane| filter::convolve_separable(plane, w, h, &kernel))
        .expect("smoothing preserves shape");
    AggregatedStack { shrink, stack }
}

/// Block means followed by radius-1 binomial post-smoothing.
pub fn acf_pool(stack: &ChannelStack, shrink: usize) -> Result<AggregatedStack> {
    Ok(post_smooth(block_pool(stack, shrink)?, shrink))
}

/// Flatten the window whose top-left cell is `origin`, channel-major then
/// row-major.
pub fn window_vector(agg: &AggregatedStack, window: &WindowSpec, origin: (usize, usize)) -> Result<Vec<f32>> {
    if agg.shrink != window.shrink {
        return Err(arg(format!("window shrink {} does not match stack shrink {}", window.shrink, agg.shrink)));
    }
    let (cw, ch) = (window.cells_w(), window.cells_h());
    let (ox, oy) = origin;
    if ox + cw > agg.width() || oy + ch > agg.height() {
        return Err(arg(format!(
            "window at cell ({ox}, {oy}) exceeds the {}x{} grid",
            agg.width(),
            agg.height()
        )));
    }
    let mut v = Vec::with_capacity(window.vector_len(agg.channels()));
    let stride = agg.width();
    for c in 0..agg.channels() {
        let plane = agg.stack.channel(c);
        for y in oy..oy + ch {
            v.extend(plane[y * stride + ox..y * stride + ox + cw].iter().map(|&x| x as f32));
        }
    }
    Ok(v)
}
