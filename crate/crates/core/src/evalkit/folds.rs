//! Mirror augmentation and seeded k-fold partitions.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{arg, Result};
use crate::imaging::RasterImage;

/// The crops followed by their horizontal mirrors.
pub fn mirror_augment(windows: &[RasterImage]) -> Vec<RasterImage> {
    windows.iter().cloned().chain(windows.iter().map(RasterImage::flip_horizontal)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffle `0..n` with `seed` and cut it into `k` test sets whose sizes differ
/// by at most one; each fold trains on the rest. Indices are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(arg(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > n {
        return Err(arg(format!("cannot split {n} items into {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let mut test = order[start..start + size].to_vec();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}
