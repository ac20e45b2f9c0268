//! Separable smoothing filters with reflect (half-sample symmetric) borders.

use alloc::vec;
use alloc::vec::Vec;

/// Map an arbitrary index onto `0..n` by half-sample symmetric reflection
/// (`... c b a | a b c ... x y z | z y x ...`), periodic with period `2n`.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

/// Normalized binomial kernel of the given radius (`C(2r, i) / 4^r`).
pub fn binomial_kernel(radius: usize) -> Vec<f64> {
    let n = 2 * radius;
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0f64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let sum: f64 = row.iter().sum();
    row.iter().map(|v| v / sum).collect()
}

/// Normalized 1-D triangle kernel, weights `r + 1 - |i|` for `|i| <= r`.
pub fn triangle_kernel(radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let raw: Vec<f64> = (-r..=r).map(|i| (r + 1 - i.abs()) as f64).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

/// Convolve a row-major plane with `kernel` along x and then along y.
///
/// `kernel` must have odd length and is applied centered.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    assert_eq!(plane.len(), width * height);
    assert!(kernel.len() % 2 == 1);
    if kernel.len() == 1 {
        return plane.iter().map(|v| v * kernel[0]).collect();
    }
    let r = (kernel.len() / 2) as isize;

    let mut tmp = vec![0.0; plane.len()];
    let mut line = vec![0.0; width + 2 * r as usize];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for (i, slot) in line.iter_mut().enumerate() {
            *slot = row[reflect_index(i as isize - r, width)];
        }
        let out = &mut tmp[y * width..(y + 1) * width];
        for (x, o) in out.iter_mut().enumerate() {
            *o = kernel.iter().zip(&line[x..]).map(|(k, v)| k * v).sum();
        }
    }

    let mut out = vec![0.0; plane.len()];
    let mut acc = vec![0.0; width];
    for y in 0..height {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (t, k) in kernel.iter().enumerate() {
            let sy = reflect_index(y as isize + t as isize - r, height);
            let src = &tmp[sy * width..(sy + 1) * width];
            for (a, s) in acc.iter_mut().zip(src) {
                *a += k * s;
            }
        }
        out[y * width..(y + 1) * width].copy_from_slice(&acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_is_half_sample_symmetric() {
        let idx: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(idx, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
        assert_eq!(reflect_index(-1, 1), 0);
        assert_eq!(reflect_index(9, 2), 1);
    }

    #[test]
    fn kernels_are_normalized() {
        assert_eq!(binomial_kernel(1), vec![0.25, 0.5, 0.25]);
        assert_eq!(binomial_kernel(0), vec![1.0]);
        assert_eq!(triangle_kernel(1), vec![0.25, 0.5, 0.25]);
        for r in 0..9 {
            let s: f64 = triangle_kernel(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_wider_than_plane_still_preserves_sum() {
        let plane = [1.0, 5.0, 2.0];
        let out = convolve_separable(&plane, 3, 1, &triangle_kernel(4));
        let s: f64 = out.iter().sum();
        assert!((s - 8.0).abs() < 1e-12);
    }
}
