//! Score models driving stratification: a native logistic-regression
//! trainer for the live loop, and a synthetic oracle with calibration knobs
//! for controlled experiments.

mod logistic;
mod oracle;

pub use logistic::{train_logistic, LinearModel, LogisticHyper, TrainingMeta};
pub use oracle::OracleScoreModel;
