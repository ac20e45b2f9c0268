//! Rotation-invariant channels from circular harmonics of the gradient field.
//!
//! The complex gradient `d = dx + i dy` is expanded into Fourier orders
//! `f_k = |d| e^{-ik theta(d)}`. Rotating the image by `a` maps `f_k` to
//! `e^{-ik a} f_k` at the rotated position, while convolving with a kernel
//! `U_{j,q} = P_j(r) e^{iq phi}` contributes `e^{iq a}`. Three families are
//! built from that bookkeeping:
//!
//! - `F1_{j,k}`: the magnitude field `|f_k| = |d|` smoothed by the isotropic
//!   kernel `U_{j,0}`.
//! - `F2_{j,k}`: `f_k * U_{j,k}`, whose phases cancel exactly; emitted as real
//!   and imaginary parts.
//! - `F3_{j,k,q}`: `c_j conj(c_{j+1}) / |c_j c_{j+1}|` with `c_j = f_k * U_{j,q}`,
//!   the relative phase between neighbouring radii; emitted as real and
//!   imaginary parts.
//!
//! Channel enumeration is family-major, then radius `j`, then field order `k`,
//! then kernel order `q`, then real before imaginary.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use super::convolve::convolve_direct;
use super::ChannelStack;
use crate::error::{arg, config, Error, Result};
use crate::imaging::{luminance, plane_gradients, RasterImage};
use crate::par;

/// F3 outputs 0 where either factor is smaller than this.
pub const F3_MAGNITUDE_GUARD: f64 = 1e-8;

/// Sub-samples per tap and axis when building harmonic kernels.
pub const KERNEL_SUPERSAMPLE: usize = 8;

/// `e^{iq phi}` at `(x, y)` with `r = |(x, y)|`; the origin has no angle and
/// only the order-0 harmonic is nonzero there.
fn harmonic(x: f64, y: f64, r: f64, order: i32) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(if order == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let unit = Complex64::new(x / r, y / r);
    let base = if order < 0 { unit.conj() } else { unit };
    (0..order.unsigned_abs()).fold(Complex64::new(1.0, 0.0), |acc, _| acc * base)
}

/// Complex-valued raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub width: usize,
    pub height: usize,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![Complex64::new(0.0, 0.0); width * height] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Complex64 {
        self.data[y * self.width + x]
    }
}

/// `d = dx + i dy` on the luminance plane of `img` (see [`luminance`]).
pub fn complex_gradient(img: &RasterImage) -> Result<ComplexField> {
    let lum = luminance(img)?;
    let (w, h) = (lum.width(), lum.height());
    let g = plane_gradients(lum.plane(0), w, h);
    let data = g.dx.iter().zip(&g.dy).map(|(&x, &y)| Complex64::new(x, y)).collect();
    Ok(ComplexField { width: w, height: h, data })
}

/// Fourier-order fields `f_0 ..= f_m`, `f_k = |d| e^{-ik theta(d)}`.
pub fn fourier_orders(d: &ComplexField, m: usize) -> Vec<ComplexField> {
    let mut out: Vec<ComplexField> = (0..=m).map(|_| ComplexField::zeros(d.width, d.height)).collect();
    for (i, &z) in d.data.iter().enumerate() {
        let mag = z.norm();
        if mag == 0.0 {
            continue;
        }
        let unit = z.conj() / mag;
        let mut p = Complex64::new(1.0, 0.0);
        for field in out.iter_mut() {
            field.data[i] = p * mag;
            p *= unit;
        }
    }
    out
}

/// The three invariant channel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    F1,
    F2,
    F3,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::F1 => "F1",
            Family::F2 => "F2",
            Family::F3 => "F3",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F1" => Ok(Family::F1),
            "F2" => Ok(Family::F2),
            "F3" => Ok(Family::F3),
            other => Err(arg(format!("unknown channel family `{other}`"))),
        }
    }
}

/// Subset of `{F1, F2, F3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FamilySet {
    bits: u8,
}

impl FamilySet {
    pub const ALL: FamilySet = FamilySet { bits: 0b111 };
    pub const NONE: FamilySet = FamilySet { bits: 0 };

    pub fn of(families: &[Family]) -> Self {
        families.iter().fold(Self::NONE, |s, &f| s.with(f))
    }

    pub fn with(self, f: Family) -> Self {
        Self { bits: self.bits | Self::bit(f) }
    }

    pub fn contains(self, f: Family) -> bool {
        self.bits & Self::bit(f) != 0
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Family> {
        [Family::F1, Family::F2, Family::F3].into_iter().filter(move |&f| self.contains(f))
    }

    fn bit(f: Family) -> u8 {
        match f {
            Family::F1 => 1,
            Family::F2 => 2,
            Family::F3 => 4,
        }
    }
}

impl fmt::Display for FamilySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for fam in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{fam}")?;
            first = false;
        }
        Ok(())
    }
}

/// Parameters of the harmonic channel families.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFeatureConfig {
    /// Highest Fourier order `m`.
    pub order: usize,
    /// Half-width of the triangular radial profile, in pixels.
    pub sigma: f64,
    /// Ring radii `r_j`, strictly increasing from 0.
    pub radii: Vec<f64>,
    pub families: FamilySet,
}

impl FrequencyFeatureConfig {
    /// Radii `0, sigma, 2 sigma, ...` (`n_radii` of them).
    pub fn new(order: usize, sigma: f64, n_radii: usize, families: FamilySet) -> Result<Self> {
        let cfg = Self {
            order,
            sigma,
            radii: (0..n_radii).map(|j| j as f64 * sigma).collect(),
            families,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(config("Fourier order must be at least 1"));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.radii.first() != Some(&0.0) {
            return Err(config("radii must start at 0"));
        }
        if self.radii.windows(2).any(|w| !(w[1] > w[0])) || self.radii.iter().any(|r| !r.is_finite()) {
            return Err(config("radii must be finite and strictly increasing"));
        }
        if self.families.contains(Family::F3) && self.radii.len() < 2 {
            return Err(config("F3 couples neighbouring radii and needs at least two"));
        }
        Ok(())
    }

    /// `(k, q)` couples used by F3: all `k, q` in `0..=m` except `(0, 0)`.
    pub fn f3_couples(&self) -> Vec<(usize, usize)> {
        let m = self.order;
        (0..=m)
            .flat_map(|k| (0..=m).map(move |q| (k, q)))
            .filter(|&(k, q)| k + q != 0)
            .collect()
    }

    fn f1_count(&self) -> usize {
        if self.families.contains(Family::F1) {
            self.radii.len() * (self.order + 1)
        } else {
            0
        }
    }

    fn f2_count(&self) -> usize {
        if self.families.contains(Family::F2) {
            2 * self.radii.len() * (self.order + 1)
        } else {
            0
        }
    }

    fn f3_count(&self) -> usize {
        if self.families.contains(Family::F3) {
            2 * (self.radii.len() - 1) * self.f3_couples().len()
        } else {
            0
        }
    }

    pub fn channel_count(&self) -> usize {
        self.f1_count() + self.f2_count() + self.f3_count()
    }

    fn f1_index(&self, j: usize, k: usize) -> usize {
        j * (self.order + 1) + k
    }

    fn f2_index(&self, j: usize, k: usize, part: usize) -> usize {
        self.f1_count() + 2 * (j * (self.order + 1) + k) + part
    }

    fn f3_index(&self, j: usize, couple: usize, part: usize) -> usize {
        self.f1_count() + self.f2_count() + 2 * (j * self.f3_couples().len() + couple) + part
    }

    /// Channel names in enumeration order.
    pub fn channel_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.channel_count());
        let nj = self.radii.len();
        if self.families.contains(Family::F1) {
            for j in 0..nj {
                for k in 0..=self.order {
                    names.push(format!("F1_j{j}_k{k}"));
                }
            }
        }
        if self.families.contains(Family::F2) {
            for j in 0..nj {
                for k in 0..=self.order {
                    names.push(format!("F2_j{j}_k{k}_re"));
                    names.push(format!("F2_j{j}_k{k}_im"));
                }
            }
        }
        if self.families.contains(Family::F3) {
            let couples = self.f3_couples();
            for j in 0..nj - 1 {
                for &(k, q) in &couples {
                    names.push(format!("F3_j{j}_k{k}_q{q}_re"));
                    names.push(format!("F3_j{j}_k{k}_q{q}_im"));
                }
            }
        }
        names
    }

    /// Largest kernel half-width in pixels.
    pub fn kernel_half_width(&self) -> usize {
        self.radii
            .iter()
            .map(|r| libm::ceil(r + self.sigma) as usize)
            .max()
            .unwrap_or(0)
    }

    /// `(k, q)` convolutions needed by the enabled families.
    fn tasks(&self) -> Vec<(usize, usize)> {
        let mut tasks = Vec::new();
        if self.families.contains(Family::F1) || self.families.contains(Family::F2) {
            tasks.push((0, 0));
        }
        if self.families.contains(Family::F2) {
            tasks.extend((1..=self.order).map(|k| (k, k)));
        }
        if self.families.contains(Family::F3) {
            tasks.extend(self.f3_couples());
        }
        tasks.sort_by_key(|&(k, q)| (q, k));
        tasks.dedup();
        tasks
    }
}

/// Circular-harmonic kernel `U_{j,q}(x) = P_j(|x|) e^{iq phi(x)}` with the
/// triangular profile `P_j(r) = max(0, 1 - |r - r_j| / sigma)`.
///
/// Taps are area averages over the pixel rather than point samples, which
/// keeps high orders at small radii close to the continuous kernel under
/// arbitrary rotations. The radial profile is normalized to unit sum. For
/// `q != 0` the residual
/// DC component left by grid discretization is projected out along `P_j`, so
/// the taps sum to zero while keeping the 90-degree covariance of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicKernel {
    pub radius_index: usize,
    pub order: i32,
    pub sigma: f64,
    pub radius: f64,
    half: usize,
    taps: Vec<Complex64>,
}

impl HarmonicKernel {
    pub fn new(radius_index: usize, radius: f64, sigma: f64, order: i32) -> Result<Self> {
        if !(sigma > 0.0) || !(radius >= 0.0) {
            return Err(config(format!("invalid kernel radius {radius} / sigma {sigma}")));
        }
        let half = libm::ceil(radius + sigma) as usize;
        let side = 2 * half + 1;
        let mut profile = vec![0.0f64; side * side];
        let mut taps = vec![Complex64::new(0.0, 0.0); side * side];
        // Each tap averages a KERNEL_SUPERSAMPLE^2 grid placed symmetrically
        // in its pixel, so quarter turns still map the stencil onto itself.
        let n = KERNEL_SUPERSAMPLE;
        let sub = |s: usize| (s as f64 + 0.5) / n as f64 - 0.5;
        let weight = 1.0 / (n * n) as f64;
        for ty in 0..side {
            for tx in 0..side {
                let t = ty * side + tx;
                for sy in 0..n {
                    for sx in 0..n {
                        let x = tx as f64 - half as f64 + sub(sx);
                        let y = ty as f64 - half as f64 + sub(sy);
                        let r = libm::sqrt(x * x + y * y);
                        let p = (1.0 - libm::fabs(r - radius) / sigma).max(0.0) * weight;
                        profile[t] += p;
                        taps[t] += harmonic(x, y, r, order) * p;
                    }
                }
            }
        }
        let total: f64 = profile.iter().sum();
        if !(total > 0.0) {
            return Err(config(format!("empty annulus at radius {radius} with sigma {sigma}")));
        }
        for t in taps.iter_mut() {
            *t /= total;
        }
        if order != 0 {
            let dc: Complex64 = taps.iter().sum();
            for (t, &p) in taps.iter_mut().zip(&profile) {
                *t -= dc * (p / total);
            }
        }
        Ok(Self { radius_index, order, sigma, radius, half, taps })
    }

    pub fn half(&self) -> usize {
        self.half
    }

    pub fn side(&self) -> usize {
        2 * self.half + 1
    }

    /// Row-major `side x side` taps; tap `(tx, ty)` sits at offset
    /// `(tx - half, ty - half)`.
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn tap(&self, dx: isize, dy: isize) -> Complex64 {
        let h = self.half as isize;
        if dx.abs() > h || dy.abs() > h {
            return Complex64::new(0.0, 0.0);
        }
        self.taps[((dy + h) as usize) * self.side() + (dx + h) as usize]
    }
}

/// Kernels `U_{j,q}` for every radius and `q in 0..=m`.
#[derive(Debug, Clone)]
pub struct KernelBank {
    order: usize,
    kernels: Vec<HarmonicKernel>,
}

impl KernelBank {
    pub fn get(&self, j: usize, q: usize) -> &HarmonicKernel {
        &self.kernels[j * (self.order + 1) + q]
    }

    pub fn iter(&self) -> impl Iterator<Item = &HarmonicKernel> {
        self.kernels.iter()
    }

    pub fn max_half(&self) -> usize {
        self.kernels.iter().map(|k| k.half()).max().unwrap_or(0)
    }
}

pub fn build_kernels(cfg: &FrequencyFeatureConfig) -> Result<KernelBank> {
    cfg.validate()?;
    let mut kernels = Vec::with_capacity(cfg.radii.len() * (cfg.order + 1));
    for (j, &r) in cfg.radii.iter().enumerate() {
        for q in 0..=cfg.order {
            kernels.push(HarmonicKernel::new(j, r, cfg.sigma, q as i32)?);
        }
    }
    Ok(KernelBank { order: cfg.order, kernels })
}

/// How the harmonic convolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionPath {
    /// Spatial stencils; the reference path.
    Direct,
    /// Zero-padded FFTs (`std` only).
    #[cfg(feature = "std")]
    Fft,
}

// FFT when available, the stencils otherwise.
#[allow(clippy::derivable_impls)]
impl Default for ConvolutionPath {
    fn default() -> Self {
        #[cfg(feature = "std")]
        {
            ConvolutionPath::Fft
        }
        #[cfg(not(feature = "std"))]
        {
            ConvolutionPath::Direct
        }
    }
}

/// Full-resolution invariant channel stack.
pub fn invariant_features(
    fks: &[ComplexField],
    bank: &KernelBank,
    cfg: &FrequencyFeatureConfig,
) -> Result<ChannelStack> {
    invariant_features_via(fks, bank, cfg, ConvolutionPath::default())
}

/// [`invariant_features`] with an explicit convolution path.
pub fn invariant_features_via(
    fks: &[ComplexField],
    bank: &KernelBank,
    cfg: &FrequencyFeatureConfig,
    path: ConvolutionPath,
) -> Result<ChannelStack> {
    let (w, h) = fks.first().map(|f| (f.width, f.height)).unwrap_or((0, 0));
    let n = w * h;
    let count = cfg.channel_count();
    let mut data = vec![0.0; count * n];
    invariant_features_with(fks, bank, cfg, path, |idx, plane| {
        data[idx * n..(idx + 1) * n].copy_from_slice(&plane);
        Ok(())
    })?;
    Ok(ChannelStack::from_parts(w, h, cfg.channel_names(), data))
}

/// Stream each invariant channel to `sink(channel_index, plane)` as soon as it
/// is available, so callers can pool without holding the full stack.
pub fn invariant_features_with(
    fks: &[ComplexField],
    bank: &KernelBank,
    cfg: &FrequencyFeatureConfig,
    path: ConvolutionPath,
    mut sink: impl FnMut(usize, Vec<f64>) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    if fks.len() != cfg.order + 1 {
        return Err(arg(format!("expected {} Fourier orders, got {}", cfg.order + 1, fks.len())));
    }
    let (w, h) = (fks[0].width, fks[0].height);
    if fks.iter().any(|f| f.width != w || f.height != h || f.data.len() != w * h) {
        return Err(arg("Fourier-order fields have mismatched dimensions"));
    }
    if bank.order != cfg.order || bank.kernels.len() != cfg.radii.len() * (cfg.order + 1) {
        return Err(arg("kernel bank does not match the configuration"));
    }
    let nj = cfg.radii.len();
    let couples = cfg.f3_couples();
    let tasks = cfg.tasks();

    let engine = Engine::new(fks, bank, path);
    // group tasks by kernel order so kernel spectra are computed once
    let mut start = 0;
    while start < tasks.len() {
        let q = tasks[start].1;
        let end = start + tasks[start..].iter().take_while(|t| t.1 == q).count();
        let kernel_cache = engine.prepare_order(q, nj);
        let group = &tasks[start..end];
        let jobs: Vec<(usize, usize)> =
            group.iter().flat_map(|&(k, _)| (0..nj).map(move |j| (k, j))).collect();
        for chunk in jobs.chunks(par::width() * nj) {
            let results = par::map_range(chunk.len(), |i| {
                let (k, j) = chunk[i];
                engine.convolve(k, q, j, &kernel_cache)
            });
            for (ci, task_jobs) in chunk.chunks(nj).enumerate() {
                let k = task_jobs[0].0;
                let convs = &results[ci * nj..(ci + 1) * nj];
                emit(cfg, &couples, k, q, convs, &mut sink)?;
            }
        }
        start = end;
    }
    Ok(())
}

fn emit(
    cfg: &FrequencyFeatureConfig,
    couples: &[(usize, usize)],
    k: usize,
    q: usize,
    convs: &[Vec<Complex64>],
    sink: &mut impl FnMut(usize, Vec<f64>) -> Result<()>,
) -> Result<()> {
    let nj = cfg.radii.len();
    if k == 0 && q == 0 && cfg.families.contains(Family::F1) {
        for (j, c) in convs.iter().enumerate() {
            let plane: Vec<f64> = c.iter().map(|z| z.re).collect();
            for kk in 0..=cfg.order {
                sink(cfg.f1_index(j, kk), plane.clone())?;
            }
        }
    }
    if k == q && cfg.families.contains(Family::F2) {
        for (j, c) in convs.iter().enumerate() {
            sink(cfg.f2_index(j, k, 0), c.iter().map(|z| z.re).collect())?;
            sink(cfg.f2_index(j, k, 1), c.iter().map(|z| z.im).collect())?;
        }
    }
    if cfg.families.contains(Family::F3) {
        if let Some(ci) = couples.iter().position(|&c| c == (k, q)) {
            for j in 0..nj - 1 {
                let (re, im): (Vec<f64>, Vec<f64>) = convs[j]
                    .iter()
                    .zip(&convs[j + 1])
                    .map(|(a, b)| relative_phase(*a, *b))
                    .map(|z| (z.re, z.im))
                    .unzip();
                sink(cfg.f3_index(j, ci, 0), re)?;
                sink(cfg.f3_index(j, ci, 1), im)?;
            }
        }
    }
    Ok(())
}

/// `a conj(b) / |a conj(b)|`, or 0 when either factor is below the guard.
#[inline]
pub fn relative_phase(a: Complex64, b: Complex64) -> Complex64 {
    let (na, nb) = (a.norm(), b.norm());
    if na < F3_MAGNITUDE_GUARD || nb < F3_MAGNITUDE_GUARD {
        return Complex64::new(0.0, 0.0);
    }
    a * b.conj() / (na * nb)
}

enum KernelCache {
    Direct,
    #[cfg(feature = "std")]
    Fft(Vec<Vec<Complex64>>),
}

struct Engine<'a> {
    fks: &'a [ComplexField],
    bank: &'a KernelBank,
    #[cfg(feature = "std")]
    fft: Option<(super::convolve::FftConvolver, Vec<Vec<Complex64>>)>,
}

impl<'a> Engine<'a> {
    fn new(fks: &'a [ComplexField], bank: &'a KernelBank, path: ConvolutionPath) -> Self {
        match path {
            ConvolutionPath::Direct => Self {
                fks,
                bank,
                #[cfg(feature = "std")]
                fft: None,
            },
            #[cfg(feature = "std")]
            ConvolutionPath::Fft => {
                let (w, h) = (fks[0].width, fks[0].height);
                let conv = super::convolve::FftConvolver::new(w, h, bank.max_half());
                let spectra = par::map_range(fks.len(), |k| conv.field_spectrum(&fks[k].data));
                Self { fks, bank, fft: Some((conv, spectra)) }
            }
        }
    }

    fn prepare_order(&self, q: usize, nj: usize) -> KernelCache {
        #[cfg(feature = "std")]
        if let Some((conv, _)) = &self.fft {
            let bank = self.bank;
            return KernelCache::Fft(par::map_range(nj, |j| conv.kernel_spectrum(bank.get(j, q))));
        }
        let _ = (q, nj);
        KernelCache::Direct
    }

    fn convolve(&self, k: usize, q: usize, j: usize, cache: &KernelCache) -> Vec<Complex64> {
        match cache {
            KernelCache::Direct => {
                let f = &self.fks[k];
                convolve_direct(&f.data, f.width, f.height, self.bank.get(j, q))
            }
            #[cfg(feature = "std")]
            KernelCache::Fft(spectra) => {
                let (conv, fields) = self.fft.as_ref().expect("FFT cache implies FFT engine");
                conv.convolve_spectra(&fields[k], &spectra[j])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, sigma: f64, nr: usize) -> FrequencyFeatureConfig {
        FrequencyFeatureConfig::new(m, sigma, nr, FamilySet::ALL).unwrap()
    }

    #[test]
    fn default_channel_budget() {
        let c = cfg(4, 6.0, 5);
        assert_eq!(c.radii, vec![0.0, 6.0, 12.0, 18.0, 24.0]);
        assert_eq!(c.f3_couples().len(), 24);
        assert_eq!(c.channel_count(), 25 + 50 + 2 * 4 * 24);
        let names = c.channel_names();
        assert_eq!(names.len(), c.channel_count());
        assert_eq!(names[0], "F1_j0_k0");
        assert_eq!(names[25], "F2_j0_k0_re");
        assert_eq!(names[26], "F2_j0_k0_im");
        assert_eq!(names[75], "F3_j0_k0_q1_re");
        assert_eq!(c.kernel_half_width(), 30);
    }

    #[test]
    fn config_validation() {
        assert!(FrequencyFeatureConfig::new(0, 6.0, 5, FamilySet::ALL).is_err());
        assert!(FrequencyFeatureConfig::new(2, 0.0, 5, FamilySet::ALL).is_err());
        assert!(FrequencyFeatureConfig::new(2, 3.0, 1, FamilySet::ALL).is_err());
        assert!(FrequencyFeatureConfig::new(2, 3.0, 1, FamilySet::of(&[Family::F1, Family::F2])).is_ok());
        let mut c = cfg(2, 3.0, 3);
        c.radii = vec![0.0, 3.0, 3.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn fourier_order_examples() {
        let d = ComplexField {
            width: 3,
            height: 1,
            data: vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0), Complex64::new(3.0, 4.0)],
        };
        let f = fourier_orders(&d, 2);
        assert_eq!(f.len(), 3);
        assert_eq!(f[0].data[2], Complex64::new(5.0, 0.0));
        assert!((f[2].data[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(f.iter().all(|fk| fk.data[1] == Complex64::new(0.0, 0.0)));
        let theta = libm::atan2(4.0, 3.0);
        let expect = Complex64::new(libm::cos(-2.0 * theta), libm::sin(-2.0 * theta)) * 5.0;
        assert!((f[2].data[2] - expect).norm() < 1e-12);
    }

    #[test]
    fn complex_gradient_of_ramp() {
        let w = 12;
        let img = RasterImage::from_fn(w, 5, 1, |_, x, _| x as f64 / w as f64).unwrap();
        let d = complex_gradient(&img).unwrap();
        for y in 0..5 {
            for x in 1..w - 1 {
                assert!((d.get(x, y) - Complex64::new(1.0 / w as f64, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let dc = HarmonicKernel::new(0, 0.0, 3.0, 0).unwrap();
        let s: Complex64 = dc.taps().iter().sum();
        assert!((s - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(dc.taps().iter().all(|t| t.im == 0.0 && t.re >= 0.0));
        assert_eq!(dc.side(), 7);

        for order in 1..=5 {
            for r in [0.0, 3.0, 6.0, 12.0] {
                let k = HarmonicKernel::new(1, r, 3.0, order).unwrap();
                let sum: Complex64 = k.taps().iter().sum();
                let l1: f64 = k.taps().iter().map(|t| t.norm()).sum();
                assert!(sum.norm() < 1e-6 * l1, "order {order} r {r}");
                let conj = HarmonicKernel::new(1, r, 3.0, -order).unwrap();
                for (a, b) in k.taps().iter().zip(conj.taps()) {
                    assert!((a.conj() - b).norm() < 1e-15);
                }
            }
        }
        assert!(HarmonicKernel::new(0, 1.0, 0.0, 0).is_err());
    }

    #[test]
    fn kernels_are_quarter_turn_covariant() {
        // U(-y, x) = i^q U(x, y) for the rotation (x, y) -> (-y, x).
        for q in 0..=4i32 {
            let k = HarmonicKernel::new(2, 6.0, 3.0, q).unwrap();
            let h = k.half() as isize;
            let iq = (0..q).fold(Complex64::new(1.0, 0.0), |a, _| a * Complex64::new(0.0, 1.0));
            for y in -h..=h {
                for x in -h..=h {
                    let lhs = k.tap(-y, x);
                    let rhs = k.tap(x, y) * iq;
                    assert!((lhs - rhs).norm() < 1e-15, "q={q} ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn zero_gradient_gives_zero_channels() {
        let c = cfg(2, 2.0, 3);
        let bank = build_kernels(&c).unwrap();
        let fks = fourier_orders(&ComplexField::zeros(9, 8), 2);
        let s = invariant_features_via(&fks, &bank, &c, ConvolutionPath::Direct).unwrap();
        assert_eq!(s.len(), c.channel_count());
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn f2_of_constant_phase_field_matches_hand_sum() {
        // Unit field with constant phase theta: f_1 = e^{-i theta} everywhere,
        // so F2 = e^{-i theta} * sum(U_{j,1}) away from the borders. With the
        // DC-free kernel that sum is 0; on a field that is constant only along
        // a half-plane the response is the sum over that half of the taps.
        let c = FrequencyFeatureConfig::new(1, 2.0, 1, FamilySet::of(&[Family::F2])).unwrap();
        let bank = build_kernels(&c).unwrap();
        let k = bank.get(0, 1);
        assert_eq!(k.side(), 5);
        let (w, h) = (15, 15);
        let theta = 0.3f64;
        let unit = Complex64::new(libm::cos(theta), libm::sin(theta));
        // d = unit on columns x >= 7, zero elsewhere
        let d = ComplexField {
            width: w,
            height: h,
            data: (0..w * h).map(|i| if i % w >= 7 { unit } else { Complex64::new(0.0, 0.0) }).collect(),
        };
        let fks = fourier_orders(&d, 1);
        let s = invariant_features_via(&fks, &bank, &c, ConvolutionPath::Direct).unwrap();
        let (px, py) = (7usize, 7usize);
        // hand sum: out(p) = sum_q f(p - q) U(q), f nonzero where p.x - q.x >= 7
        let mut expect = Complex64::new(0.0, 0.0);
        for qy in -2isize..=2 {
            for qx in -2isize..=2 {
                if px as isize - qx >= 7 {
                    expect += unit.conj() * k.tap(qx, qy);
                }
            }
        }
        let re = s.channel_by_name("F2_j0_k1_re").unwrap()[py * w + px];
        let im = s.channel_by_name("F2_j0_k1_im").unwrap()[py * w + px];
        assert!((Complex64::new(re, im) - expect).norm() < 1e-14);
        assert!(expect.norm() > 0.1);
    }
}
