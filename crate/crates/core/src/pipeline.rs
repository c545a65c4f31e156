//! End-to-end feature extraction and named experiment presets.
//!
//! Preset names follow `<denoise>-<n>svm[-sift]`: `none`, `svd30` (one SVD
//! per pair) or `svd120` (one SVD on all streams), then `1svm` for a single
//! classifier over concatenated pair features or `4svm` for one classifier
//! per pair with summed probabilities.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::denoise::{remove_background, DenoiseError, SvdMode};
use crate::features::{gabor_features, sift_descriptors, to_image, ChannelImage, FeatureError, GaborBank, GaborParams, SiftParams};
use crate::learn::{FusionConfig, FusionMode, FusionModel, LearnError, PairDescriptor};
use crate::model::{CsiTrace, ModelError};
use crate::preprocess::{self, PreprocessConfig, PreprocessError, StreamMatrix};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("unknown pipeline preset {0:?}")]
    UnknownPreset(String),
}

impl PipelineError {
    /// True for failures of the numerical stages rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            PipelineError::Denoise(DenoiseError::NonFinite)
                | PipelineError::Preprocess(PreprocessError::NonFinite)
                | PipelineError::Feature(FeatureError::NonFinite)
                | PipelineError::Learn(LearnError::NonFinite)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureChoice {
    Gabor(GaborParams),
    /// Dense SIFT quantized against per-pair codebooks (`fusion.kmeans`).
    BowSift(SiftParams),
}

/// Image size and Gabor bank scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    /// 576 × 432 images, 15-pixel kernels.
    Full,
    /// 72 × 54 images, 9-pixel kernels.
    Fast,
}

impl std::str::FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Resolution::Full),
            "fast" => Ok(Resolution::Fast),
            _ => Err(format!("unknown resolution {s:?}")),
        }
    }
}

/// Every knob from raw trace to classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub name: String,
    pub preprocess: PreprocessConfig,
    pub denoise: Option<SvdMode>,
    /// Pixels along the stream axis.
    pub image_height: usize,
    /// Pixels along the time axis.
    pub image_width: usize,
    pub features: FeatureChoice,
    pub fusion: FusionConfig,
}

pub const PRESETS: [&str; 6] = ["none-4svm", "none-1svm", "svd30-4svm", "svd30-1svm", "svd120-4svm", "svd120-1svm"];

impl PipelineConfig {
    pub fn preset(name: &str, resolution: Resolution) -> Result<Self, PipelineError> {
        let unknown = || PipelineError::UnknownPreset(name.to_string());
        let mut parts = name.split('-');
        let denoise = match parts.next() {
            Some("none") => None,
            Some("svd30") => Some(SvdMode::per_pair()),
            Some("svd120") => Some(SvdMode::stacked()),
            _ => return Err(unknown()),
        };
        let mode = match parts.next() {
            Some("1svm") => FusionMode::Early,
            Some("4svm") => FusionMode::Late,
            _ => return Err(unknown()),
        };
        let sift = match parts.next() {
            None => false,
            Some("sift") => true,
            Some(_) => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        let (image_height, image_width, gabor) = match resolution {
            Resolution::Full => (432, 576, GaborParams::full()),
            Resolution::Fast => (54, 72, GaborParams::fast()),
        };
        Ok(PipelineConfig {
            name: name.to_string(),
            preprocess: PreprocessConfig::default(),
            denoise,
            image_height,
            image_width,
            features: if sift { FeatureChoice::BowSift(SiftParams::default()) } else { FeatureChoice::Gabor(gabor) },
            fusion: FusionConfig { mode, ..FusionConfig::default() },
        })
    }

    /// Length of one pair's feature vector after quantization.
    pub fn pair_feature_len(&self) -> usize {
        match &self.features {
            FeatureChoice::Gabor(g) => g.feature_len(),
            FeatureChoice::BowSift(_) => self.fusion.kmeans.k,
        }
    }
}

/// Where to tap the pipeline for plotting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Amplitudes at the original frame times.
    Raw,
    Preprocessed,
    Denoised,
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" => Ok(Stage::Raw),
            "preprocessed" => Ok(Stage::Preprocessed),
            "denoised" => Ok(Stage::Denoised),
            _ => Err(format!("unknown stage {s:?}")),
        }
    }
}

/// Stream matrix of `trace` after `stage`. `Denoised` without a configured
/// SVD mode uses the stacked one.
pub fn stage_matrix(trace: &CsiTrace, stage: Stage, cfg: &PipelineConfig) -> Result<StreamMatrix, PipelineError> {
    trace.validate()?;
    if stage == Stage::Raw {
        return Ok(preprocess::amplitudes(trace));
    }
    let m = preprocess::run(trace, &cfg.preprocess)?;
    if stage == Stage::Preprocessed {
        return Ok(m);
    }
    Ok(remove_background(&m, cfg.denoise.unwrap_or_else(SvdMode::stacked))?)
}

/// Reusable extraction state; cheap to share across threads.
pub struct Extractor {
    pub cfg: PipelineConfig,
    bank: Option<Arc<GaborBank>>,
}

impl Extractor {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        let bank = match &cfg.features {
            FeatureChoice::Gabor(p) => Some(Arc::new(GaborBank::new(p.clone())?)),
            FeatureChoice::BowSift(_) => None,
        };
        Ok(Extractor { cfg, bank })
    }

    pub fn preprocess(&self, trace: &CsiTrace) -> Result<StreamMatrix, PipelineError> {
        trace.validate()?;
        Ok(preprocess::run(trace, &self.cfg.preprocess)?)
    }

    /// One image per Tx-Rx pair after preprocessing and optional denoising.
    pub fn images(&self, trace: &CsiTrace) -> Result<Vec<ChannelImage>, PipelineError> {
        self.images_from(&self.preprocess(trace)?)
    }

    /// Like [`Extractor::images`] for an already preprocessed matrix.
    pub fn images_from(&self, m: &StreamMatrix) -> Result<Vec<ChannelImage>, PipelineError> {
        let denoised;
        let m = match self.cfg.denoise {
            Some(mode) => {
                denoised = remove_background(m, mode)?;
                &denoised
            }
            None => m,
        };
        m.pairs()
            .into_iter()
            .map(|p| Ok(to_image(&m.pair_matrix(p), self.cfg.image_height, self.cfg.image_width)?))
            .collect()
    }

    /// Training-independent descriptors, one per pair.
    pub fn extract(&self, trace: &CsiTrace) -> Result<Vec<PairDescriptor>, PipelineError> {
        self.extract_from(&self.preprocess(trace)?)
    }

    /// Like [`Extractor::extract`] for an already preprocessed matrix, so
    /// pipelines sharing preprocessing settings can share the work.
    pub fn extract_from(&self, m: &StreamMatrix) -> Result<Vec<PairDescriptor>, PipelineError> {
        self.images_from(m)?
            .iter()
            .map(|img| match (&self.cfg.features, &self.bank) {
                (FeatureChoice::Gabor(_), Some(bank)) => Ok(PairDescriptor::Vector(gabor_features(img, bank)?.values)),
                (FeatureChoice::BowSift(p), _) => Ok(PairDescriptor::Bag(sift_descriptors(img, p)?)),
                (FeatureChoice::Gabor(_), None) => unreachable!("bank built in new"),
            })
            .collect()
    }
}

/// A trained model with the pipeline that produced its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub pipeline: PipelineConfig,
    pub model: FusionModel,
}
