//! Training loops, k-fold ensembling and evaluation metrics.

mod dataset;
mod kfold;
mod metrics;
mod trainer;

pub use dataset::Dataset;
pub use kfold::kfold_split;
pub use metrics::{confusion, evaluate, roc_auc, F1Average, Metrics};
pub use trainer::{
    predict_scores, train, train_ensemble, BatchSize, EpochRecord, TrainConfig, TrainHistory,
};
