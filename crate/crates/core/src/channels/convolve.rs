//! Complex 2-D convolution with harmonic kernels.
//!
//! [`convolve_direct`] is the reference spatial-stencil path and works without
//! `std`. With the `std` feature, [`FftConvolver`] computes the same linear
//! convolution through zero-padded FFTs.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use super::frequency::HarmonicKernel;
use crate::filter::reflect_index;

/// Reflect-pad a complex plane by `pad` on every side.
pub(crate) fn pad_reflect(field: &[Complex64], w: usize, h: usize, pad: usize) -> Vec<Complex64> {
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut out = Vec::with_capacity(pw * ph);
    for y in 0..ph {
        let sy = reflect_index(y as isize - pad as isize, h);
        for x in 0..pw {
            let sx = reflect_index(x as isize - pad as isize, w);
            out.push(field[sy * w + sx]);
        }
    }
    out
}

/// `out(p) = sum_q field(p - q) * kernel(q)` with reflect borders.
pub fn convolve_direct(field: &[Complex64], w: usize, h: usize, kernel: &HarmonicKernel) -> Vec<Complex64> {
    assert_eq!(field.len(), w * h);
    let half = kernel.half();
    let side = kernel.side();
    let padded = pad_reflect(field, w, h, half);
    let pw = w + 2 * half;
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for (t, &tap) in kernel.taps().iter().enumerate() {
        if tap.re == 0.0 && tap.im == 0.0 {
            continue;
        }
        let (ty, tx) = (t / side, t % side);
        // p - q in padded coordinates: (x + half - (tx - half), ...)
        let ox = 2 * half - tx;
        let oy = 2 * half - ty;
        for y in 0..h {
            let src = &padded[(y + oy) * pw + ox..(y + oy) * pw + ox + w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * tap;
            }
        }
    }
    out
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn fft_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(feature = "std")]
pub use fft::FftConvolver;

#[cfg(feature = "std")]
mod fft {
    use super::*;
    use rustfft::{Fft, FftPlanner};
    use std::sync::Arc;

    /// Linear convolution of `w x h` fields with kernels of half-width up to
    /// `pad`, via 2-D FFTs of size `n1 x n2 >= (w + 2 pad) x (h + 2 pad)`.
    ///
    /// Spectra are kept in transposed (column-major) layout; only products of
    /// spectra from the same convolver are meaningful.
    pub struct FftConvolver {
        w: usize,
        h: usize,
        pad: usize,
        n1: usize,
        n2: usize,
        row_fwd: Arc<dyn Fft<f64>>,
        row_inv: Arc<dyn Fft<f64>>,
        col_fwd: Arc<dyn Fft<f64>>,
        col_inv: Arc<dyn Fft<f64>>,
    }

    impl FftConvolver {
        pub fn new(w: usize, h: usize, pad: usize) -> Self {
            let n1 = fft_len(w + 2 * pad);
            let n2 = fft_len(h + 2 * pad);
            let mut planner = FftPlanner::new();
            Self {
                w,
                h,
                pad,
                n1,
                n2,
                row_fwd: planner.plan_fft_forward(n1),
                row_inv: planner.plan_fft_inverse(n1),
                col_fwd: planner.plan_fft_forward(n2),
                col_inv: planner.plan_fft_inverse(n2),
            }
        }

        pub fn fft_size(&self) -> (usize, usize) {
            (self.n1, self.n2)
        }

        fn forward(&self, mut buf: Vec<Complex64>, live_rows: usize) -> Vec<Complex64> {
            let (n1, n2) = (self.n1, self.n2);
            self.row_fwd.process(&mut buf[..live_rows * n1]);
            let mut t = transpose(&buf, n1, n2);
            self.col_fwd.process(&mut t);
            t
        }

        /// Spectrum of a reflect-padded field.
        pub fn field_spectrum(&self, field: &[Complex64]) -> Vec<Complex64> {
            assert_eq!(field.len(), self.w * self.h);
            let padded = pad_reflect(field, self.w, self.h, self.pad);
            let pw = self.w + 2 * self.pad;
            let ph = self.h + 2 * self.pad;
            let mut buf = vec![Complex64::new(0.0, 0.0); self.n1 * self.n2];
            for y in 0..ph {
                buf[y * self.n1..y * self.n1 + pw].copy_from_slice(&padded[y * pw..(y + 1) * pw]);
            }
            self.forward(buf, ph)
        }

        /// Spectrum of a kernel placed with its center at the origin (wrapped).
        pub fn kernel_spectrum(&self, kernel: &HarmonicKernel) -> Vec<Complex64> {
            let half = kernel.half();
            assert!(half <= self.pad, "kernel half-width {half} exceeds padding {}", self.pad);
            let side = kernel.side();
            let mut buf = vec![Complex64::new(0.0, 0.0); self.n1 * self.n2];
            for (t, &tap) in kernel.taps().iter().enumerate() {
                let qx = (t % side) as isize - half as isize;
                let qy = (t / side) as isize - half as isize;
                let x = qx.rem_euclid(self.n1 as isize) as usize;
                let y = qy.rem_euclid(self.n2 as isize) as usize;
                buf[y * self.n1 + x] = tap;
            }
            self.forward(buf, self.n2)
        }

        /// Inverse transform of `a * b`, cropped back to the field's extent.
        pub fn convolve_spectra(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
            let (n1, n2) = (self.n1, self.n2);
            let mut prod: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
            self.col_inv.process(&mut prod);
            let t = transpose(&prod, n2, n1);
            let mut rows = t[self.pad * n1..(self.pad + self.h) * n1].to_vec();
            self.row_inv.process(&mut rows);
            let scale = 1.0 / (n1 * n2) as f64;
            let mut out = Vec::with_capacity(self.w * self.h);
            for y in 0..self.h {
                out.extend(rows[y * n1 + self.pad..y * n1 + self.pad + self.w].iter().map(|v| v * scale));
            }
            out
        }
    }

    /// Transpose a row-major `cols x rows` matrix (rows of length `cols`).
    fn transpose(src: &[Complex64], cols: usize, rows: usize) -> Vec<Complex64> {
        const B: usize = 32;
        let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
        for by in (0..rows).step_by(B) {
            for bx in (0..cols).step_by(B) {
                for y in by..(by + B).min(rows) {
                    for x in bx..(bx + B).min(cols) {
                        out[x * rows + y] = src[y * cols + x];
                    }
                }
            }
        }
        out
    }
}
