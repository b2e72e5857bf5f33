//! The two classifiers whose accuracy the augmentation experiment measures:
//! brute-force KNN and a two-hidden-layer feedforward network.

pub mod knn;
pub mod mln;

pub use knn::{knn_sweep, KnnModel, KnnSweepCell, KnnSweepReport};
pub use mln::{
    mln_backward, mln_init, mln_loss, mln_train, EpochStats, LossKind, MlnModel, TrainConfig,
    TrainHistory, TrainOutcome, PAPER_LAYOUT,
};
