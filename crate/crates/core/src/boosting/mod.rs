//! AdaBoost over depth-3 trees with a soft cascade, and detector training
//! with hard-negative mining.

pub mod adaboost;
pub mod quantize;
pub mod train;
pub mod tree;

pub use adaboost::{
    balanced_weights, beta_alpha, boost, boost_with, exp_loss, BoostOutcome, BoostedModel, Booster, Ensemble, FeatureSampling, RoundStats, Score,
    EPS_FLOOR,
};
pub use quantize::QuantizedSet;
pub use train::{positive_crop, positive_sets, train_detector, NegativeImage, Patch, StageReport, TrainParams};
pub use tree::{train_tree, train_tree_on, FittedTree, Node, Tree, MAX_DEPTH};
