//! Seeded synthetic corpora: cars or planes on textured noise.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::metrics::AnnotatedBox;
use crate::error::{arg, Error, Result};
use crate::geometry::Rect;
use crate::imaging::RasterImage;
use crate::par;

/// Supersampling factor per axis for anti-aliasing.
const SUPERSAMPLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    /// Ellipse with windshield and rear-window bands.
    Car,
    /// Fuselage, wings and tailplane.
    Plane,
}

impl ShapeKind {
    pub fn label(self) -> &'static str {
        match self {
            ShapeKind::Car => "car",
            ShapeKind::Plane => "plane",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "car" => Ok(ShapeKind::Car),
            "plane" => Ok(ShapeKind::Plane),
            other => Err(arg(format!("unknown shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub kind: ShapeKind,
    /// Inclusive range of objects per image.
    pub objects: (usize, usize),
    /// Object length in pixels.
    pub size: f64,
    /// Relative size jitter, uniform in `[-j, j]`.
    pub size_jitter: f64,
    /// Rotation range in degrees.
    pub rotation: (f64, f64),
    /// Standard deviation of additive white noise.
    pub noise: f64,
    /// Amplitude of the pink background texture.
    pub texture: f64,
    /// Distractor blobs and blocks per image.
    pub distractors: usize,
}

impl SynthSpec {
    pub fn cars() -> Self {
        Self {
            width: 128,
            height: 128,
            kind: ShapeKind::Car,
            objects: (1, 2),
            size: 20.0,
            size_jitter: 0.05,
            rotation: (0.0, 360.0),
            noise: 0.02,
            texture: 0.06,
            distractors: 3,
        }
    }

    pub fn planes() -> Self {
        Self { kind: ShapeKind::Plane, size: 40.0, width: 160, height: 160, ..Self::cars() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(arg("synthetic images need positive dimensions"));
        }
        if self.objects.0 > self.objects.1 {
            return Err(arg("object count range is inverted"));
        }
        if !(self.size > 2.0) || !(self.size_jitter >= 0.0 && self.size_jitter < 1.0) {
            return Err(arg("object size must exceed 2 px and jitter lie in [0, 1)"));
        }
        if !(self.rotation.0 <= self.rotation.1) || !(self.noise >= 0.0) || !(self.texture >= 0.0) {
            return Err(arg("invalid rotation range or noise levels"));
        }
        let reach = self.size * (1.0 + self.size_jitter) + 4.0;
        if reach > self.width.min(self.height) as f64 && self.objects.1 > 0 {
            return Err(arg("objects do not fit in the image"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthImage {
    pub id: String,
    pub image: RasterImage,
    pub truths: Vec<AnnotatedBox>,
}

/// Zero-mean, unit-variance texture from octaves of bilinear value noise with
/// equal amplitude per octave.
pub fn pink_noise<R: Rng>(width: usize, height: usize, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; width * height];
    let mut cell = width.max(height).next_power_of_two() as f64 / 2.0;
    while cell >= 1.0 {
        let gw = (width as f64 / cell) as usize + 2;
        let gh = (height as f64 / cell) as usize + 2;
        let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
        for y in 0..height {
            let fy = y as f64 / cell;
            let y0 = fy as usize;
            let ty = fy - y0 as f64;
            for x in 0..width {
                let fx = x as f64 / cell;
                let x0 = fx as usize;
                let tx = fx - x0 as f64;
                let a = grid[y0 * gw + x0] * (1.0 - tx) + grid[y0 * gw + x0 + 1] * tx;
                let b = grid[(y0 + 1) * gw + x0] * (1.0 - tx) + grid[(y0 + 1) * gw + x0 + 1] * tx;
                out[y * width + x] += a * (1.0 - ty) + b * ty;
            }
        }
        cell /= 2.0;
    }
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var).max(1e-12);
    out.iter_mut().for_each(|v| *v = (*v - mean) / sd);
    out
}

/// Ellipse in object coordinates: center `(u, v)` along and across the
/// object axis, semi-axes `(a, b)` along and across.
#[derive(Debug, Clone, Copy)]
struct Ellipse {
    u: f64,
    v: f64,
    a: f64,
    b: f64,
}

impl Ellipse {
    fn contains(&self, u: f64, v: f64) -> bool {
        let du = (u - self.u) / self.a;
        let dv = (v - self.v) / self.b;
        du * du + dv * dv <= 1.0
    }

    /// Tight axis-aligned box after rotating by `theta` about the object center.
    fn bounds(&self, cx: f64, cy: f64, cos: f64, sin: f64) -> Rect {
        let px = cx + self.u * cos - self.v * sin;
        let py = cy + self.u * sin + self.v * cos;
        let hx = libm::sqrt(self.a * self.a * cos * cos + self.b * self.b * sin * sin);
        let hy = libm::sqrt(self.a * self.a * sin * sin + self.b * self.b * cos * cos);
        Rect::new(px - hx, py - hy, 2.0 * hx, 2.0 * hy)
    }
}

fn union(a: Rect, b: Rect) -> Rect {
    let x0 = a.x.min(b.x);
    let y0 = a.y.min(b.y);
    let x1 = (a.x + a.w).max(b.x + b.w);
    let y1 = (a.y + a.h).max(b.y + b.h);
    Rect::new(x0, y0, x1 - x0, y1 - y0)
}

/// Object parts and a material classifier in object coordinates.
struct Shape {
    parts: Vec<Ellipse>,
    /// Material for a point inside the union: 0 body, 1 window.
    material: fn(&Shape, f64, f64) -> Option<usize>,
    length: f64,
}

fn car_material(s: &Shape, u: f64, v: f64) -> Option<usize> {
    if !s.parts[0].contains(u, v) {
        return None;
    }
    let l = s.length;
    let front = u > 0.12 * l && u < 0.26 * l;
    let rear = u > -0.34 * l && u < -0.24 * l;
    let inset = libm::fabs(v) < 0.8 * s.parts[0].b;
    Some(if (front || rear) && inset { 1 } else { 0 })
}

fn plane_material(s: &Shape, u: f64, v: f64) -> Option<usize> {
    s.parts.iter().any(|p| p.contains(u, v)).then_some(0)
}

fn make_shape(kind: ShapeKind, length: f64) -> Shape {
    match kind {
        ShapeKind::Car => Shape {
            parts: vec![Ellipse { u: 0.0, v: 0.0, a: 0.5 * length, b: 0.35 * length }],
            material: car_material,
            length,
        },
        ShapeKind::Plane => Shape {
            parts: vec![
                Ellipse { u: 0.0, v: 0.0, a: 0.5 * length, b: 0.08 * length },
                Ellipse { u: 0.05 * length, v: 0.0, a: 0.07 * length, b: 0.45 * length },
                Ellipse { u: -0.42 * length, v: 0.0, a: 0.04 * length, b: 0.17 * length },
            ],
            material: plane_material,
            length,
        },
    }
}

struct Placed {
    shape: Shape,
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    colors: [[f64; 3]; 2],
    bounds: Rect,
}

impl Placed {
    fn new(shape: Shape, cx: f64, cy: f64, theta: f64, colors: [[f64; 3]; 2]) -> Self {
        let (cos, sin) = (libm::cos(theta), libm::sin(theta));
        let bounds = shape
            .parts
            .iter()
            .map(|p| p.bounds(cx, cy, cos, sin))
            .reduce(union)
            .expect("shapes have parts");
        Self { shape, cx, cy, cos, sin, colors, bounds }
    }

    fn material_at(&self, x: f64, y: f64) -> Option<usize> {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (self.shape.material)(&self.shape, u, v)
    }
}

/// Composite `obj` over the planar RGB buffer with supersampled coverage.
fn render(buf: &mut [f64], width: usize, height: usize, obj: &Placed) {
    let n = width * height;
    let x0 = libm::floor(obj.bounds.x).max(0.0) as usize;
    let y0 = libm::floor(obj.bounds.y).max(0.0) as usize;
    let x1 = (libm::ceil(obj.bounds.x + obj.bounds.w) as usize + 1).min(width);
    let y1 = (libm::ceil(obj.bounds.y + obj.bounds.h) as usize + 1).min(height);
    let step = 1.0 / SUPERSAMPLE as f64;
    for y in y0..y1 {
        for x in x0..x1 {
            let mut cover = [0usize; 2];
            for sy in 0..SUPERSAMPLE {
                for sx in 0..SUPERSAMPLE {
                    let px = x as f64 + (sx as f64 + 0.5) * step;
                    let py = y as f64 + (sy as f64 + 0.5) * step;
                    if let Some(m) = obj.material_at(px, py) {
                        cover[m] += 1;
                    }
                }
            }
            let total = (SUPERSAMPLE * SUPERSAMPLE) as f64;
            let (f0, f1) = (cover[0] as f64 / total, cover[1] as f64 / total);
            if f0 + f1 == 0.0 {
                continue;
            }
            for c in 0..3 {
                let i = c * n + y * width + x;
                buf[i] = buf[i] * (1.0 - f0 - f1) + f0 * obj.colors[0][c] + f1 * obj.colors[1][c];
            }
        }
    }
}

const BODY_COLORS: [[f64; 3]; 6] = [
    [0.88, 0.88, 0.86],
    [0.12, 0.12, 0.14],
    [0.72, 0.16, 0.14],
    [0.16, 0.26, 0.62],
    [0.66, 0.68, 0.72],
    [0.85, 0.75, 0.20],
];

fn object_colors<R: Rng>(kind: ShapeKind, rng: &mut R) -> [[f64; 3]; 2] {
    let body = match kind {
        ShapeKind::Car => BODY_COLORS[rng.random_range(0..BODY_COLORS.len())],
        ShapeKind::Plane => {
            let g = rng.random_range(0.78..0.95);
            [g, g, g + 0.02]
        }
    };
    let lum = (body[0] + body[1] + body[2]) / 3.0;
    let window = if lum > 0.3 { [0.08, 0.09, 0.11] } else { [0.42, 0.45, 0.5] };
    [body, window]
}

fn image_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

fn render_one(spec: &SynthSpec, index: usize, seed: u64) -> Result<SynthImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(image_seed(seed, index));
    let (w, h) = (spec.width, spec.height);
    let n = w * h;
    let base = [rng.random_range(0.35..0.55), rng.random_range(0.35..0.55), rng.random_range(0.3..0.5)];
    let tex = pink_noise(w, h, &mut rng);
    let mut buf = vec![0.0; 3 * n];
    for c in 0..3 {
        for i in 0..n {
            buf[c * n + i] = base[c] + spec.texture * tex[i];
        }
    }

    let count = rng.random_range(spec.objects.0..=spec.objects.1);
    let mut occupied: Vec<Rect> = Vec::new();
    let mut objects = Vec::new();
    for _ in 0..count {
        for _attempt in 0..200 {
            let length = spec.size * (1.0 + rng.random_range(-1.0..=1.0) * spec.size_jitter);
            let deg = if spec.rotation.0 == spec.rotation.1 {
                spec.rotation.0
            } else {
                rng.random_range(spec.rotation.0..spec.rotation.1)
            };
            let theta = deg * core::f64::consts::PI / 180.0;
            let colors = object_colors(spec.kind, &mut rng);
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let placed = Placed::new(make_shape(spec.kind, length), cx, cy, theta, colors);
            let b = placed.bounds;
            let inside = b.x >= 2.0 && b.y >= 2.0 && b.x + b.w <= w as f64 - 2.0 && b.y + b.h <= h as f64 - 2.0;
            let grown = Rect::new(b.x - 6.0, b.y - 6.0, b.w + 12.0, b.h + 12.0);
            if inside && occupied.iter().all(|o| o.intersection(&grown) == 0.0) {
                occupied.push(grown);
                objects.push(placed);
                break;
            }
        }
    }

    for _ in 0..spec.distractors {
        for _attempt in 0..50 {
            let disk = rng.random_bool(0.5);
            let size = if disk { rng.random_range(3.0..7.0) } else { rng.random_range(8.0..26.0) };
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let g = rng.random_range(0.1..0.9);
            let color = [g, g * rng.random_range(0.8..1.2), g * rng.random_range(0.8..1.2)];
            let shape = if disk {
                Shape {
                    parts: vec![Ellipse { u: 0.0, v: 0.0, a: size, b: size }],
                    material: plane_material,
                    length: 2.0 * size,
                }
            } else {
                let aspect = rng.random_range(0.3..1.0);
                Shape {
                    parts: vec![Ellipse { u: 0.0, v: 0.0, a: 0.5 * size, b: 0.5 * size * aspect }],
                    material: block_material,
                    length: size,
                }
            };
            let theta = rng.random_range(0.0..core::f64::consts::PI);
            let placed = Placed::new(shape, cx, cy, theta, [color, color]);
            let b = placed.bounds;
            let grown = Rect::new(b.x - 3.0, b.y - 3.0, b.w + 6.0, b.h + 6.0);
            if objects.iter().all(|o: &Placed| o.bounds.intersection(&grown) == 0.0) {
                render(&mut buf, w, h, &placed);
                break;
            }
        }
    }

    for obj in &objects {
        render(&mut buf, w, h, obj);
    }
    for v in buf.iter_mut() {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v = (*v + spec.noise * e).clamp(0.0, 1.0);
    }
    let id = format!("synth_{index:05}");
    let truths = objects
        .iter()
        .map(|o| AnnotatedBox { image_id: id.clone(), rect: o.bounds, label: spec.kind.label().to_string() })
        .collect();
    Ok(SynthImage { id, image: RasterImage::new(w, h, 3, buf)?, truths })
}

/// Rectangle with the inscribed ellipse's extent: `|u| <= a`, `|v| <= b`.
fn block_material(s: &Shape, u: f64, v: f64) -> Option<usize> {
    let p = s.parts[0];
    (libm::fabs(u) <= p.a && libm::fabs(v) <= p.b).then_some(0)
}

/// `count` images with tight ground-truth boxes, each reproducible from
/// `(seed, index)` alone.
pub fn synth_corpus(spec: &SynthSpec, count: usize, seed: u64) -> Result<Vec<SynthImage>> {
    spec.validate()?;
    par::map_range(count, |i| render_one(spec, i, seed)).into_iter().collect()
}
