//! Wi-Fi CSI sensing toolkit.
//!
//! The pipeline turns channel state information into texture images and
//! classifies them:
//!
//! 1. [`model`]: multipath channel types and a synthetic trace generator.
//! 2. [`preprocess`]: resampling, zero-phase Butterworth low-pass and
//!    moving-window normalization of subcarrier amplitudes.
//! 3. [`denoise`]: SVD-based removal of the dominant (background) component.
//! 4. [`features`]: grayscale channel images, Gabor and dense-SIFT/BoW
//!    descriptors.
//! 5. [`learn`]: one-vs-rest linear SVMs, early/late fusion across Tx-Rx
//!    pairs, and the evaluation protocols.
//!
//! [`pipeline`] chains the stages under named presets and [`scenario`]
//! describes synthetic datasets (rooms, locations, subjects, actions).

pub mod denoise;
pub mod features;
pub mod learn;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod scenario;

pub use denoise::{remove_background, svd, DenoiseError, SvdMode, SvdScope};
pub use features::{ChannelImage, FeatureError, FeatureKind, FeatureVector};
pub use learn::{Dataset, EvalReport, FusionConfig, FusionMode, LabelKind, LearnError, Protocol, Sample};
pub use model::{CsiFrame, CsiTrace, ModelError, SyntheticChannelConfig};
pub use pipeline::{Extractor, ModelBundle, PipelineConfig, PipelineError, Resolution, Stage};
pub use preprocess::{PreprocessConfig, PreprocessError, StreamMatrix};
pub use scenario::{Scenario, TraceSpec};
