//! Full channel pipeline: color, gradient magnitude and harmonic channels,
//! region smoothing and pooling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::aggregate::{self, block_mean, post_smooth, region_convolve, AggregatedStack};
use crate::channels::frequency::{
    build_kernels, complex_gradient, fourier_orders, invariant_features_with, ConvolutionPath, Family,
    FrequencyFeatureConfig,
};
use crate::channels::spatial::{color_channels, gradient_magnitude, GRADIENT_MAGNITUDE, GRADIENT_PRESMOOTH_RADIUS};
use crate::channels::ChannelStack;
use crate::error::{arg, Error, Result};
use crate::imaging::{luminance, smooth, ColorSpace, RasterImage};

/// Channel groups sharing one power-law exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelGroup {
    Color,
    GradientMagnitude,
    F1,
    F2,
    F3,
}

impl ChannelGroup {
    pub const ALL: [ChannelGroup; 5] = [
        ChannelGroup::Color,
        ChannelGroup::GradientMagnitude,
        ChannelGroup::F1,
        ChannelGroup::F2,
        ChannelGroup::F3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelGroup::Color => "color",
            ChannelGroup::GradientMagnitude => "gradient_magnitude",
            ChannelGroup::F1 => "frequency_F1",
            ChannelGroup::F2 => "frequency_F2",
            ChannelGroup::F3 => "frequency_F3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn of_family(f: Family) -> Self {
        match f {
            Family::F1 => ChannelGroup::F1,
            Family::F2 => ChannelGroup::F2,
            Family::F3 => ChannelGroup::F3,
        }
    }
}

impl fmt::Display for ChannelGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| arg(format!("unknown channel group `{s}`")))
    }
}

/// Everything that determines the channel layout of a window vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub color_space: ColorSpace,
    pub frequency: FrequencyFeatureConfig,
    pub shrink: usize,
}

impl ChannelConfig {
    pub fn new(color_space: ColorSpace, frequency: FrequencyFeatureConfig, shrink: usize) -> Result<Self> {
        let cfg = Self { color_space, frequency, shrink };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.shrink, 2 | 4 | 8) {
            return Err(arg(format!("shrink must be 2, 4 or 8, got {}", self.shrink)));
        }
        self.frequency.validate()
    }

    /// Channel names in stack order: color, gradient magnitude, harmonic.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .color_space
            .component_names()
            .iter()
            .map(|c| format!("{}_{c}", self.color_space))
            .collect();
        names.push(GRADIENT_MAGNITUDE.into());
        names.extend(self.frequency.channel_names());
        names
    }

    pub fn channel_count(&self) -> usize {
        4 + self.frequency.channel_count()
    }

    /// Group of every channel, in stack order.
    pub fn channel_groups(&self) -> Vec<ChannelGroup> {
        let mut groups = Vec::with_capacity(self.channel_count());
        groups.extend([ChannelGroup::Color; 3]);
        groups.push(ChannelGroup::GradientMagnitude);
        for f in self.frequency.families.iter() {
            let n = match f {
                Family::F1 => self.frequency.radii.len() * (self.frequency.order + 1),
                Family::F2 => 2 * self.frequency.radii.len() * (self.frequency.order + 1),
                Family::F3 => 2 * (self.frequency.radii.len() - 1) * self.frequency.f3_couples().len(),
            };
            groups.extend(core::iter::repeat_n(ChannelGroup::of_family(f), n));
        }
        groups
    }

    /// Groups that have at least one channel.
    pub fn active_groups(&self) -> Vec<ChannelGroup> {
        let mut g = self.channel_groups();
        g.dedup();
        g
    }

    /// Pixels of context a window needs on each side for its channels to be
    /// free of border effects.
    pub fn support(&self) -> usize {
        let harmonic = if self.frequency.families.is_empty() {
            0
        } else {
            self.frequency.kernel_half_width() + GRADIENT_PRESMOOTH_RADIUS + 1
        };
        let spatial = aggregate::region_radius(self.shrink) + crate::channels::spatial::NORMALIZATION_RADIUS + 2;
        let s = harmonic.max(spatial);
        s.div_ceil(self.shrink) * self.shrink
    }
}

fn check_input(img: &RasterImage, cfg: &ChannelConfig) -> Result<()> {
    cfg.validate()?;
    if img.channels() != 3 {
        return Err(arg(format!("channel features need an RGB image, got {} channels", img.channels())));
    }
    aggregate::check_shrink(img.width(), img.height(), cfg.shrink)
}

fn spatial_stack(img: &RasterImage, cfg: &ChannelConfig) -> Result<ChannelStack> {
    let mut stack = color_channels(img, cfg.color_space)?;
    stack.extend(gradient_magnitude(img)?)?;
    region_convolve(&stack, aggregate::region_radius(cfg.shrink), &[true; 4])
}

fn harmonic_orders(img: &RasterImage, cfg: &ChannelConfig) -> Result<Vec<crate::channels::frequency::ComplexField>> {
    let lum = smooth(&luminance(img)?, GRADIENT_PRESMOOTH_RADIUS);
    Ok(fourier_orders(&complex_gradient(&lum)?, cfg.frequency.order))
}

/// Full-resolution channel stack after region smoothing.
pub fn compute_full(img: &RasterImage, cfg: &ChannelConfig) -> Result<ChannelStack> {
    compute_full_via(img, cfg, ConvolutionPath::default())
}

pub fn compute_full_via(img: &RasterImage, cfg: &ChannelConfig, path: ConvolutionPath) -> Result<ChannelStack> {
    check_input(img, cfg)?;
    let mut stack = spatial_stack(img, cfg)?;
    if !cfg.frequency.families.is_empty() {
        let fks = harmonic_orders(img, cfg)?;
        let bank = build_kernels(&cfg.frequency)?;
        let names = cfg.frequency.channel_names();
        let mut planes: Vec<Option<Vec<f64>>> = (0..names.len()).map(|_| None).collect();
        invariant_features_with(&fks, &bank, &cfg.frequency, path, |i, p| {
            planes[i] = Some(p);
            Ok(())
        })?;
        for (name, plane) in names.into_iter().zip(planes) {
            stack.push(name, plane.expect("every harmonic channel is emitted"))?;
        }
    }
    Ok(stack)
}

/// Block-mean pooled channels without post-smoothing. Harmonic channels are
/// pooled as they are produced, so the full-resolution stack is never held.
pub fn compute_pooled(img: &RasterImage, cfg: &ChannelConfig) -> Result<ChannelStack> {
    compute_pooled_via(img, cfg, ConvolutionPath::default())
}

pub fn compute_pooled_via(img: &RasterImage, cfg: &ChannelConfig, path: ConvolutionPath) -> Result<ChannelStack> {
    check_input(img, cfg)?;
    let (w, h, s) = (img.width(), img.height(), cfg.shrink);
    let (cw, ch) = aggregate::pooled_dims(w, h, s);
    let cells = cw * ch;
    let mut data = alloc::vec![0.0; cells * cfg.channel_count()];

    let spatial = spatial_stack(img, cfg)?;
    for i in 0..spatial.len() {
        data[i * cells..(i + 1) * cells].copy_from_slice(&block_mean(spatial.channel(i), w, h, s));
    }
    drop(spatial);

    if !cfg.frequency.families.is_empty() {
        let fks = harmonic_orders(img, cfg)?;
        let bank = build_kernels(&cfg.frequency)?;
        invariant_features_with(&fks, &bank, &cfg.frequency, path, |i, p| {
            let at = (4 + i) * cells;
            data[at..at + cells].copy_from_slice(&block_mean(&p, w, h, s));
            Ok(())
        })?;
    }
    Ok(ChannelStack::from_parts(cw, ch, cfg.channel_names(), data))
}

/// Pooled and post-smoothed channels: the representation windows are cut from.
pub fn compute_aggregated(img: &RasterImage, cfg: &ChannelConfig) -> Result<AggregatedStack> {
    Ok(post_smooth(compute_pooled(img, cfg)?, cfg.shrink))
}
