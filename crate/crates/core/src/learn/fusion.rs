use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{argmax, train_svm, LinearSvm, SvmParams};
use super::{LearnError, PairDescriptor, Sample};
use crate::features::{bow_quantize, train_codebook, Codebook, FeatureKind, FeatureVector, KmeansParams};

/// How per-pair features are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionMode {
    /// One classifier over the concatenation of all pairs' features.
    Early,
    /// One classifier per pair; probability vectors are summed.
    Late,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub mode: FusionMode,
    pub svm: SvmParams,
    /// Used when samples carry local descriptors.
    pub kmeans: KmeansParams,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig { mode: FusionMode::Late, svm: SvmParams::default(), kmeans: KmeansParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusionModel {
    pub mode: FusionMode,
    /// One for early fusion, one per pair for late fusion.
    pub svms: Vec<LinearSvm>,
    /// One codebook per pair when the inputs are descriptor bags.
    pub codebooks: Option<Vec<Codebook>>,
}

impl FusionModel {
    /// Global class ids scored by the model, ascending.
    pub fn classes(&self) -> &[usize] {
        &self.svms[0].classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.svms[0].class_names
    }

    /// Turns a sample's descriptors into per-pair feature vectors, quantizing
    /// bags against this model's codebooks.
    pub fn features(&self, sample: &Sample) -> Result<Vec<FeatureVector>, LearnError> {
        sample
            .pairs
            .iter()
            .enumerate()
            .map(|(p, d)| match d {
                PairDescriptor::Vector(v) => Ok(FeatureVector { values: v.clone(), kind: FeatureKind::Gabor, pair: p }),
                PairDescriptor::Bag(b) => {
                    let cb = self.codebooks.as_ref().and_then(|c| c.get(p)).ok_or(LearnError::MissingCodebook(p))?;
                    Ok(bow_quantize(b, cb, p)?)
                }
            })
            .collect()
    }

    pub fn predict_sample(&self, sample: &Sample) -> Result<(usize, Vec<f64>), LearnError> {
        fuse_predict(self, &self.features(sample)?)
    }
}

/// Predicted global class id and the fused probability vector over
/// [`FusionModel::classes`]. Late fusion sums the per-pair probabilities,
/// picks the first maximum and returns the sum divided by the pair count.
pub fn fuse_predict(model: &FusionModel, feats: &[FeatureVector]) -> Result<(usize, Vec<f64>), LearnError> {
    match model.mode {
        FusionMode::Early => {
            let x: Vec<f64> = feats.iter().flat_map(|f| f.values.iter().copied()).collect();
            let p = model.svms[0].predict_proba(&x)?;
            Ok((model.classes()[argmax(&p)], p))
        }
        FusionMode::Late => {
            let pairs = model.svms.len();
            let mut sum = vec![0.0; model.classes().len()];
            for (pair, svm) in model.svms.iter().enumerate() {
                let f = feats.iter().find(|f| f.pair == pair).ok_or(LearnError::MissingPair(pair))?;
                for (s, p) in sum.iter_mut().zip(svm.predict_proba(&f.values)?) {
                    *s += p;
                }
            }
            let label = model.classes()[argmax(&sum)];
            Ok((label, sum.into_iter().map(|s| s / pairs as f64).collect()))
        }
    }
}

/// Fits codebooks (if needed) and classifiers on the given samples only.
pub fn fit_fusion(
    samples: &[&Sample],
    y: &[usize],
    class_names: &[String],
    cfg: &FusionConfig,
) -> Result<FusionModel, LearnError> {
    let n_pairs = samples.first().map_or(0, |s| s.pairs.len());
    if n_pairs == 0 {
        return Err(LearnError::Empty);
    }
    if let Some(bad) = samples.iter().find(|s| s.pairs.len() != n_pairs) {
        return Err(LearnError::PairCount { sample: bad.id.clone(), got: bad.pairs.len(), expected: n_pairs });
    }
    let bags = matches!(samples[0].pairs[0], PairDescriptor::Bag(_));
    let codebooks = if bags {
        let cbs = (0..n_pairs)
            .into_par_iter()
            .map(|p| {
                let descs: Vec<Vec<f64>> = samples
                    .iter()
                    .flat_map(|s| match &s.pairs[p] {
                        PairDescriptor::Bag(b) => b.clone(),
                        PairDescriptor::Vector(_) => Vec::new(),
                    })
                    .collect();
                train_codebook(&descs, &cfg.kmeans)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(cbs)
    } else {
        None
    };
    let shell = FusionModel { mode: cfg.mode, svms: Vec::new(), codebooks };
    let feats: Vec<Vec<FeatureVector>> = samples.iter().map(|s| shell.features(s)).collect::<Result<_, _>>()?;
    let matrix = |cols: &dyn Fn(&[FeatureVector]) -> Vec<f64>| -> Result<Array2<f64>, LearnError> {
        let rows: Vec<Vec<f64>> = feats.iter().map(|f| cols(f)).collect();
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(LearnError::DimensionMismatch { got: r.len(), expected: d });
        }
        Ok(Array2::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j]))
    };
    let svms = match cfg.mode {
        FusionMode::Early => {
            let x = matrix(&|f| f.iter().flat_map(|v| v.values.iter().copied()).collect())?;
            vec![train_svm(&x, y, class_names, &cfg.svm)?]
        }
        FusionMode::Late => {
            let xs = (0..n_pairs).map(|p| matrix(&|f| f[p].values.clone())).collect::<Result<Vec<_>, _>>()?;
            xs.par_iter().map(|x| train_svm(x, y, class_names, &cfg.svm)).collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(FusionModel { svms, ..shell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::svm::Scaler;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_svm(classes: usize, dim: usize, seed: u64) -> LinearSvm {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LinearSvm {
            weights: Array2::from_shape_fn((classes, dim), |_| rng.sample(StandardNormal)),
            biases: (0..classes).map(|_| rng.sample(StandardNormal)).collect(),
            reg_c: 1.0,
            classes: (0..classes).collect(),
            class_names: (0..classes).map(|c| c.to_string()).collect(),
            scaler: Scaler { mean: vec![0.0; dim], std: vec![1.0; dim] },
            epochs: vec![0; classes],
        }
    }

    fn fv(values: Vec<f64>, pair: usize) -> FeatureVector {
        FeatureVector { values, kind: FeatureKind::Gabor, pair }
    }

    #[test]
    fn late_fusion_of_identical_models_equals_single_model() {
        let svm = random_svm(6, 10, 1);
        let late = FusionModel { mode: FusionMode::Late, svms: vec![svm.clone(); 4], codebooks: None };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..10).map(|_| rng.sample(StandardNormal)).collect();
            let feats: Vec<FeatureVector> = (0..4).map(|p| fv(x.clone(), p)).collect();
            let (label, probs) = fuse_predict(&late, &feats).unwrap();
            assert_eq!(label, svm.predict(&x).unwrap());
            let single = svm.predict_proba(&x).unwrap();
            for (a, b) in probs.iter().zip(&single) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn late_fusion_with_one_pair_is_the_pair_classifier() {
        let svm = random_svm(3, 4, 5);
        let late = FusionModel { mode: FusionMode::Late, svms: vec![svm.clone()], codebooks: None };
        let x = vec![0.3, -1.0, 2.0, 0.1];
        let (label, probs) = fuse_predict(&late, &[fv(x.clone(), 0)]).unwrap();
        assert_eq!(label, svm.predict(&x).unwrap());
        assert_eq!(probs, svm.predict_proba(&x).unwrap());
    }

    #[test]
    fn majority_of_confident_pairs_wins() {
        // pairs 0-2 give class 0 probability 0.9, pair 3 gives class 1 probability 1.0
        let sharp = |favor: usize, p: f64| {
            let mut s = random_svm(2, 1, 0);
            s.weights.fill(0.0);
            let logit = (p / (1.0 - p)).ln();
            s.biases = if favor == 0 { vec![logit, 0.0] } else { vec![0.0, logit] };
            s
        };
        let late = FusionModel {
            mode: FusionMode::Late,
            svms: vec![sharp(0, 0.9), sharp(0, 0.9), sharp(0, 0.9), sharp(1, 1.0 - 1e-15)],
            codebooks: None,
        };
        let feats: Vec<FeatureVector> = (0..4).map(|p| fv(vec![0.0], p)).collect();
        let (label, probs) = fuse_predict(&late, &feats).unwrap();
        assert_eq!(label, 0);
        assert!((probs[0] * 4.0 - 2.7).abs() < 1e-9);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let late = FusionModel { mode: FusionMode::Late, svms: vec![random_svm(2, 2, 1); 2], codebooks: None };
        assert!(matches!(fuse_predict(&late, &[fv(vec![0.0, 0.0], 0)]), Err(LearnError::MissingPair(1))));
    }

    #[test]
    fn early_fusion_concatenates() {
        let svm = random_svm(3, 6, 9);
        let early = FusionModel { mode: FusionMode::Early, svms: vec![svm.clone()], codebooks: None };
        let feats = vec![fv(vec![1.0, 2.0, 3.0], 0), fv(vec![4.0, 5.0, 6.0], 1)];
        let (label, _) = fuse_predict(&early, &feats).unwrap();
        assert_eq!(label, svm.predict(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap());
    }
}
