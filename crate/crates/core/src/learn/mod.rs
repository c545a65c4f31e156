//! Linear SVMs, per-pair fusion and evaluation protocols.
//!
//! Everything training-dependent (feature scaling, codebooks) is fitted on
//! the training split only, so the protocols here never leak test data.

mod dataset;
mod eval;
mod fusion;
mod svm;

pub use dataset::{Dataset, LabelKind, PairDescriptor, Sample};
pub use eval::{
    combinations, cross_validate, group_folds, stratified_folds, train_and_test, two_stage_classify, EvalReport,
    Prediction, Protocol, TwoStageModel,
};
pub use fusion::{fit_fusion, fuse_predict, FusionConfig, FusionMode, FusionModel};
pub use svm::{argmax, softmax, train_svm, LinearSvm, Scaler, SvmParams};

use crate::features::FeatureError;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("feature dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("label id {0} has no class name")]
    UnknownClass(usize),
    #[error("no features for pair {0}")]
    MissingPair(usize),
    #[error("no codebook for pair {0}")]
    MissingCodebook(usize),
    #[error("no training samples")]
    Empty,
    #[error("sample {sample} has {got} pairs, expected {expected}")]
    PairCount { sample: String, got: usize, expected: usize },
    #[error("{n} samples cannot be split into {k} folds")]
    TooFewSamples { n: usize, k: usize },
    #[error("need at least two groups, found {0}")]
    TooFewGroups(usize),
    #[error("class {0:?} never appears in any training split")]
    ClassNeverTrained(String),
    #[error("no action model for location {0:?}")]
    MissingLocationModel(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}
