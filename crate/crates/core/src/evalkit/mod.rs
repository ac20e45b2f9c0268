//! Evaluation toolkit: matching, PR metrics, augmentation, folds and a
//! synthetic corpus generator.

pub mod folds;
pub mod metrics;
pub mod synth;

pub use folds::{kfold_split, mirror_augment, Fold};
pub use metrics::{evaluate, match_detections, pr_metrics, AnnotatedBox, MatchResult, PrCurve, PrPoint, DEFAULT_MATCH_IOU};
pub use synth::{pink_noise, synth_corpus, ShapeKind, SynthImage, SynthSpec};
