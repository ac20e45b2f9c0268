#![cfg_attr(not(feature = "std"), no_std)]
//! Rotation-invariant spatial-frequency channel features and a boosted
//! sliding-window detector built on top of them.
//!
//! The crate is `no_std` + `alloc` by default. Everything here is a pure
//! function of in-memory rasters; file formats, image decoding and the command
//! line live in the `orsim` companion crate.
//!
//! Pipeline stages:
//!
//! 1. [`imaging`] – rasters, resampling, color conversion, gradients, smoothing.
//! 2. [`channels`] – color, normalized gradient magnitude and the circular-harmonic
//!    invariant channel families.
//! 3. [`aggregate`] – triangular region smoothing, block pooling and window vectors.
//! 4. [`pyramid`] – power-law channel scaling and octave-anchored fast pyramids.
//! 5. [`boosting`] – AdaBoost over depth-3 trees with a soft cascade.
//! 6. [`detector`] – sliding-window scanning and (two-step) NMS.
//! 7. [`evalkit`] – matching, PR/AP metrics, augmentation, folds, synthetic corpora.
//!
//! # Features
//!
//! - `std` – enables the FFT convolution path (via `rustfft`) for the harmonic
//!   channels. The direct spatial path remains the reference implementation.
//! - `rayon` – implies `std`; parallelizes convolutions, split search and
//!   pyramid levels. Results are bitwise identical to the sequential build.

extern crate alloc;

pub mod aggregate;
pub mod boosting;
pub mod channels;
pub mod detector;
pub mod error;
pub mod evalkit;
pub mod features;
pub mod filter;
pub mod geometry;
pub mod imaging;
pub mod pyramid;

mod par;

pub use error::{Error, Result};
