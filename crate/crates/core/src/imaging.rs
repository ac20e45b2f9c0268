//! Planar floating-point rasters and the low-level operations every channel
//! computation builds on: resampling, color conversion, gradients, smoothing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{arg, Error, Result};
use crate::filter;

/// Planar multi-channel image with real values (nominally in `[0, 1]`).
///
/// Plane `c` occupies `data[c * w * h..(c + 1) * w * h]`, each plane row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(arg(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if channels == 0 {
            return Err(arg("image needs at least one channel"));
        }
        if data.len() != width * height * channels {
            return Err(arg(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(arg("image contains non-finite values"));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Build an image from per-pixel values; `f(channel, x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn constant(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_planes(width: usize, height: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        let channels = planes.len();
        let data = planes.into_iter().flatten().collect();
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Single-channel copy of plane `c`.
    pub fn channel(&self, c: usize) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    /// Apply `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RasterImage> {
        Self::new(self.width, self.height, self.channels, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Mirror left-right.
    pub fn flip_horizontal(&self) -> RasterImage {
        let mut out = self.clone();
        let (w, h) = (self.width, self.height);
        for c in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    out.data[(c * h + y) * w + x] = self.get(c, w - 1 - x, y);
                }
            }
        }
        out
    }

    /// Exact quarter-turn: pixel `(x, y)` moves to `(h - 1 - y, x)`.
    ///
    /// In image coordinates (y down) this turns a gradient `d = dx + i dy`
    /// into `i * d` at the mapped pixel.
    pub fn rotate90(&self) -> RasterImage {
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0; self.data.len()];
        for c in 0..self.channels {
            for y in 0..h {
                for x in 0..w {
                    let (nx, ny) = (h - 1 - y, x);
                    data[(c * w + ny) * h + nx] = self.get(c, x, y);
                }
            }
        }
        RasterImage { width: h, height: w, channels: self.channels, data }
    }

    /// Crop a `width x height` region starting at `(x0, y0)`; samples outside
    /// the image are filled by half-sample symmetric reflection.
    pub fn crop_reflect(&self, x0: isize, y0: isize, width: usize, height: usize) -> Result<RasterImage> {
        Self::from_fn(width, height, self.channels, |c, x, y| {
            let sx = filter::reflect_index(x0 + x as isize, self.width);
            let sy = filter::reflect_index(y0 + y as isize, self.height);
            self.get(c, sx, sy)
        })
    }
}

/// Color spaces supported for the color channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColorSpace {
    Rgb,
    Luv,
    Hsv,
}

impl ColorSpace {
    pub fn component_names(self) -> [&'static str; 3] {
        match self {
            ColorSpace::Rgb => ["R", "G", "B"],
            ColorSpace::Luv => ["L", "U", "V"],
            ColorSpace::Hsv => ["H", "S", "V"],
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorSpace::Rgb => "RGB",
            ColorSpace::Luv => "LUV",
            ColorSpace::Hsv => "HSV",
        })
    }
}

impl FromStr for ColorSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RGB" => Ok(ColorSpace::Rgb),
            "LUV" => Ok(ColorSpace::Luv),
            "HSV" => Ok(ColorSpace::Hsv),
            other => Err(arg(format!("unknown color space `{other}`"))),
        }
    }
}

// sRGB primaries, D65 white.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412453, 0.357580, 0.180423],
    [0.212671, 0.715160, 0.072169],
    [0.019334, 0.119193, 0.950227],
];
const WHITE_D65: [f64; 3] = [0.950456, 1.0, 1.088754];

/// Output ranges used to rescale `u` and `v` into `[0, 1]`.
pub const LUV_U_RANGE: (f64, f64) = (-134.0, 220.0);
pub const LUV_V_RANGE: (f64, f64) = (-140.0, 122.0);

/// CIE L*u*v* (unscaled: `L` in `[0, 100]`) of a linear RGB triple.
pub fn rgb_to_luv(r: f64, g: f64, b: f64) -> [f64; 3] {
    let xyz: [f64; 3] = core::array::from_fn(|i| {
        RGB_TO_XYZ[i][0] * r + RGB_TO_XYZ[i][1] * g + RGB_TO_XYZ[i][2] * b
    });
    let [xn, yn, zn] = WHITE_D65;
    let yr = xyz[1] / yn;
    let l = if yr > 0.008856 {
        116.0 * libm::cbrt(yr) - 16.0
    } else {
        903.3 * yr
    };
    let denom = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
    let denom_n = xn + 15.0 * yn + 3.0 * zn;
    let (un, vn) = (4.0 * xn / denom_n, 9.0 * yn / denom_n);
    let (up, vp) = if denom > 0.0 {
        (4.0 * xyz[0] / denom, 9.0 * xyz[1] / denom)
    } else {
        (un, vn)
    };
    [l, 13.0 * l * (up - un), 13.0 * l * (vp - vn)]
}

/// HSV with hue in degrees `[0, 360)`.
pub fn rgb_to_hsv(r: f64, g: f64, b: f64) -> [f64; 3] {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    let h = if h < 0.0 { h + 360.0 } else { h };
    [h, s, max]
}

/// Convert an RGB image to `space`, each output channel rescaled to `[0, 1]`.
///
/// LUV: `L / 100`, `u` and `v` mapped affinely from [`LUV_U_RANGE`] and
/// [`LUV_V_RANGE`]. HSV: `H / 360`, `S`, `V`.
pub fn to_color_space(img: &RasterImage, space: ColorSpace) -> Result<RasterImage> {
    if img.channels() != 3 {
        if img.channels() == 1 && space == ColorSpace::Rgb {
            return Ok(img.clone());
        }
        return Err(arg(format!(
            "{space} conversion needs a 3-channel image, got {} channels",
            img.channels()
        )));
    }
    if space == ColorSpace::Rgb {
        return Ok(img.clone());
    }
    let n = img.width() * img.height();
    let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
    let mut out = vec![0.0; 3 * n];
    for i in 0..n {
        let px = match space {
            ColorSpace::Luv => {
                let [l, u, v] = rgb_to_luv(r[i], g[i], b[i]);
                [
                    l / 100.0,
                    (u - LUV_U_RANGE.0) / (LUV_U_RANGE.1 - LUV_U_RANGE.0),
                    (v - LUV_V_RANGE.0) / (LUV_V_RANGE.1 - LUV_V_RANGE.0),
                ]
            }
            ColorSpace::Hsv => {
                let [h, s, v] = rgb_to_hsv(r[i], g[i], b[i]);
                [h / 360.0, s, v]
            }
            ColorSpace::Rgb => unreachable!(),
        };
        for c in 0..3 {
            out[c * n + i] = px[c];
        }
    }
    RasterImage::new(img.width(), img.height(), 3, out)
}

/// Luminance plane used by the harmonic channels: the input itself for a
/// single-channel image, otherwise `L / 100` of LUV.
pub fn luminance(img: &RasterImage) -> Result<RasterImage> {
    match img.channels() {
        1 => Ok(img.clone()),
        3 => {
            let n = img.width() * img.height();
            let (r, g, b) = (img.plane(0), img.plane(1), img.plane(2));
            let data = (0..n).map(|i| rgb_to_luv(r[i], g[i], b[i])[0] / 100.0).collect();
            RasterImage::new(img.width(), img.height(), 1, data)
        }
        c => Err(arg(format!("cannot derive luminance from {c} channels"))),
    }
}

/// Bilinear resampling of one plane to `out_w x out_h` with half-pixel-centered
/// coordinates; source samples are clamped at the borders.
pub fn resample_plane(src: &[f64], w: usize, h: usize, out_w: usize, out_h: usize) -> Vec<f64> {
    assert_eq!(src.len(), w * h);
    if out_w == w && out_h == h {
        return src.to_vec();
    }
    let taps = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let ratio = n_in as f64 / n_out as f64;
        (0..n_out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (n_in - 1) as f64);
                let i0 = libm::floor(s) as usize;
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(w, out_w);
    let yt = taps(h, out_h);

    let mut rows = vec![0.0; out_w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (x, &(x0, x1, t)) in xt.iter().enumerate() {
            rows[y * out_w + x] = row[x0] * (1.0 - t) + row[x1] * t;
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for (y, &(y0, y1, t)) in yt.iter().enumerate() {
        for x in 0..out_w {
            out[y * out_w + x] = rows[y0 * out_w + x] * (1.0 - t) + rows[y1 * out_w + x] * t;
        }
    }
    out
}

/// Output size of resampling a `dim`-pixel axis by `scale`.
pub fn scaled_dim(dim: usize, scale: f64) -> usize {
    libm::round(dim as f64 * scale) as usize
}

/// Bilinear resampling by `scale`; output dims are `round(dim * scale)`.
pub fn resample(img: &RasterImage, scale: f64) -> Result<RasterImage> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(arg(format!("resample scale must be positive, got {scale}")));
    }
    let out_w = scaled_dim(img.width(), scale);
    let out_h = scaled_dim(img.height(), scale);
    resample_to(img, out_w, out_h)
}

/// Bilinear resampling to explicit output dimensions.
pub fn resample_to(img: &RasterImage, out_w: usize, out_h: usize) -> Result<RasterImage> {
    if out_w == 0 || out_h == 0 {
        return Err(arg(format!(
            "resampling {}x{} would produce an empty {out_w}x{out_h} image",
            img.width(),
            img.height()
        )));
    }
    let planes = (0..img.channels())
        .map(|c| resample_plane(img.plane(c), img.width(), img.height(), out_w, out_h))
        .collect();
    RasterImage::from_planes(out_w, out_h, planes)
}

/// Bilinear samples on an `out_w x out_h` grid centered at `(cx, cy)` with a
/// spacing of `step` source pixels; samples outside the image reflect.
pub fn sample_grid(img: &RasterImage, cx: f64, cy: f64, out_w: usize, out_h: usize, step: f64) -> Result<RasterImage> {
    if !(step > 0.0) || !step.is_finite() || !cx.is_finite() || !cy.is_finite() {
        return Err(arg(format!("invalid sampling grid at ({cx}, {cy}) with step {step}")));
    }
    let taps = |c: f64, n_out: usize, n_in: usize| -> Vec<(usize, usize, f64)> {
        (0..n_out)
            .map(|i| {
                let s = c + (i as f64 + 0.5 - 0.5 * n_out as f64) * step - 0.5;
                let f = libm::floor(s);
                let i0 = f as isize;
                (filter::reflect_index(i0, n_in), filter::reflect_index(i0 + 1, n_in), s - f)
            })
            .collect()
    };
    let xt = taps(cx, out_w, img.width());
    let yt = taps(cy, out_h, img.height());
    RasterImage::from_fn(out_w, out_h, img.channels(), |c, x, y| {
        let (x0, x1, tx) = xt[x];
        let (y0, y1, ty) = yt[y];
        let top = img.get(c, x0, y0) * (1.0 - tx) + img.get(c, x1, y0) * tx;
        let bottom = img.get(c, x0, y1) * (1.0 - tx) + img.get(c, x1, y1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// Horizontal and vertical derivatives of a single-channel raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub width: usize,
    pub height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Centered differences, `dx = (I(x+1) - I(x-1)) / 2`, with replicated edges.
pub fn gradients(channel: &RasterImage) -> Result<GradientPair> {
    if channel.channels() != 1 {
        return Err(arg(format!(
            "gradients need a single-channel image, got {} channels",
            channel.channels()
        )));
    }
    Ok(plane_gradients(channel.plane(0), channel.width(), channel.height()))
}

pub(crate) fn plane_gradients(p: &[f64], w: usize, h: usize) -> GradientPair {
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            dx[y * w + x] = (p[y * w + xp] - p[y * w + xm]) / 2.0;
            dy[y * w + x] = (p[yp * w + x] - p[ym * w + x]) / 2.0;
        }
    }
    GradientPair { width: w, height: h, dx, dy }
}

/// Separable binomial smoothing; radius 1 is `[1, 2, 1] / 4` per axis and
/// radius 0 is the identity.
pub fn smooth(img: &RasterImage, radius: usize) -> RasterImage {
    if radius == 0 {
        return img.clone();
    }
    let kernel = filter::binomial_kernel(radius);
    let planes = (0..img.channels())
        .map(|c| filter::convolve_separable(img.plane(c), img.width(), img.height(), &kernel))
        .collect();
    RasterImage::from_planes(img.width(), img.height(), planes)
        .expect("smoothing preserves shape and finiteness")
}
