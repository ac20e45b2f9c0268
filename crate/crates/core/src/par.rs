//! Order-preserving map helpers that fan out over rayon when it is enabled.

use alloc::vec::Vec;

#[cfg(feature = "rayon")]
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "rayon"))]
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Number of tasks worth keeping in flight at once.
#[cfg(feature = "rayon")]
pub(crate) fn width() -> usize {
    rayon::current_num_threads().max(1)
}

#[cfg(not(feature = "rayon"))]
pub(crate) fn width() -> usize {
    1
}
