//! Texture descriptors of channel images.
//!
//! A [`StreamMatrix`](crate::preprocess::StreamMatrix) becomes a grayscale
//! [`ChannelImage`] (streams down, time across). Two descriptors are
//! extracted from it: Gabor filter-bank statistics and a bag-of-words
//! histogram over dense SIFT descriptors.

mod gabor;
mod image;
mod kmeans;
mod sift;

use serde::{Deserialize, Serialize};

pub use gabor::{gabor_features, GaborBank, GaborKernel, GaborParams, GaborPlan};
pub use image::{resize_bilinear, to_image, ChannelImage, FLAT_SPAN};
pub use kmeans::{bow_quantize, train_codebook, Codebook, KmeansParams};
pub use sift::{sift_descriptors, SiftParams, SIFT_DIM};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("empty stream matrix")]
    EmptyMatrix,
    #[error("image {height}x{width} is smaller than the required {min}x{min}")]
    ImageTooSmall { height: usize, width: usize, min: usize },
    #[error("invalid output size {0}x{1}")]
    InvalidSize(usize, usize),
    #[error("non-finite pixel")]
    NonFinite,
    #[error("invalid Gabor parameters: {0}")]
    InvalidGabor(String),
    #[error("need {k} distinct descriptors, got {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("descriptor dimension {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Gabor,
    BowSift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: FeatureKind,
    pub pair: usize,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Concatenation of per-pair vectors in the given order.
pub fn concat(parts: &[FeatureVector]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.values.iter().copied()).collect()
}
