use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;

/// Per-dimension z-scoring fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population std; 1 where the training data has no variance.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Array2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for c in x.columns() {
            let m = c.sum() / n;
            let v = c.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n;
            mean.push(m);
            std.push(if v > 0.0 && v.sqrt() > 1e-12 * m.abs().max(1.0) { v.sqrt() } else { 1.0 });
        }
        Scaler { mean, std }
    }

    pub fn transform_row(&self, x: ArrayView1<f64>) -> Vec<f64> {
        x.iter().zip(self.mean.iter().zip(&self.std)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    pub fn transform(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Hinge-loss weight `C`.
    pub reg_c: f64,
    /// Value of the constant feature appended to every sample; its weight
    /// is the bias.
    pub bias_scale: f64,
    /// Relative duality gap at which training stops.
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { reg_c: 1.0, bias_scale: 1.0, tol: 1e-4, max_epochs: 1000, seed: 0 }
    }
}

/// One-vs-rest linear classifier over z-scored features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    /// `classes × dim`.
    pub weights: Array2<f64>,
    pub biases: Vec<f64>,
    pub reg_c: f64,
    /// Global class ids, ascending; row `i` of `weights` scores `classes[i]`.
    pub classes: Vec<usize>,
    pub class_names: Vec<String>,
    pub scaler: Scaler,
    /// Epochs used by each binary problem.
    pub epochs: Vec<usize>,
}

impl LinearSvm {
    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        if x.len() != self.dim() {
            return Err(LearnError::DimensionMismatch { got: x.len(), expected: self.dim() });
        }
        let z = self.scaler.transform_row(ArrayView1::from(x));
        Ok(self
            .weights
            .rows()
            .into_iter()
            .zip(&self.biases)
            .map(|(w, b)| w.iter().zip(&z).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect())
    }

    /// Softmax of the decision values, in `classes` order.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnError> {
        Ok(softmax(&self.decision_values(x)?))
    }

    /// Global class id with the largest decision value, lowest on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize, LearnError> {
        Ok(self.classes[argmax(&self.decision_values(x)?)])
    }
}

pub fn softmax(d: &[f64]) -> Vec<f64> {
    let m = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = d.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Trains one binary L2-regularized hinge-loss problem per class present in
/// `y` by dual coordinate descent. `class_names[c]` names global class `c`.
pub fn train_svm(x: &Array2<f64>, y: &[usize], class_names: &[String], params: &SvmParams) -> Result<LinearSvm, LearnError> {
    let (n, d) = x.dim();
    if n != y.len() {
        return Err(LearnError::LengthMismatch { samples: n, labels: y.len() });
    }
    if d == 0 {
        return Err(LearnError::DimensionMismatch { got: 0, expected: 1 });
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(LearnError::NonFinite);
    }
    if !(params.reg_c.is_finite() && params.reg_c > 0.0) {
        return Err(LearnError::InvalidParameter(format!("reg_c {}", params.reg_c)));
    }
    let mut classes: Vec<usize> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(LearnError::SingleClass);
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= class_names.len()) {
        return Err(LearnError::UnknownClass(c));
    }
    let scaler = Scaler::fit(x);
    let z = scaler.transform(x);
    let rows: Vec<Vec<f64>> = z.rows().into_iter().map(|r| r.to_vec()).collect();
    let schedule = Schedule::new(n, params.seed);
    let mut weights = Array2::zeros((classes.len(), d));
    let mut biases = Vec::with_capacity(classes.len());
    let mut epochs = Vec::with_capacity(classes.len());
    for (k, &c) in classes.iter().enumerate() {
        let signs: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
        let (w, b, e) = dual_cd(&rows, &signs, params, &schedule);
        weights.row_mut(k).assign(&ndarray::Array1::from(w));
        biases.push(b);
        epochs.push(e);
    }
    Ok(LinearSvm {
        weights,
        biases,
        reg_c: params.reg_c,
        class_names: classes.iter().map(|&c| class_names[c].clone()).collect(),
        classes,
        scaler,
        epochs,
    })
}

/// Visiting order of every epoch, shared by all binary problems.
struct Schedule {
    n: usize,
    seed: u64,
}

impl Schedule {
    fn new(n: usize, seed: u64) -> Self {
        Schedule { n, seed }
    }

    fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut order: Vec<usize> = (0..self.n).collect();
        std::iter::repeat_with(move || {
            order.shuffle(&mut rng);
            order.clone()
        })
    }
}

/// The duality gap costs as much as an epoch, so it is only evaluated
/// every few epochs.
const GAP_CHECK_EVERY: usize = 10;

fn dual_cd(x: &[Vec<f64>], y: &[f64], params: &SvmParams, schedule: &Schedule) -> (Vec<f64>, f64, usize) {
    let d = x[0].len();
    let c = params.reg_c;
    let bs = params.bias_scale;
    let qii: Vec<f64> = x.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>() + bs * bs).collect();
    let mut alpha = vec![0.0; x.len()];
    let mut w = vec![0.0; d];
    let mut wb = 0.0;
    let mut used = 0;
    for (epoch, order) in schedule.iter().take(params.max_epochs.max(1)).enumerate() {
        used = epoch + 1;
        for i in order {
            if qii[i] <= 0.0 {
                continue;
            }
            let xi = &x[i];
            let margin = y[i] * (dot(&w, xi) + wb * bs);
            let g = margin - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            if pg == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - g / qii[i]).clamp(0.0, c);
            let step = (alpha[i] - old) * y[i];
            if step != 0.0 {
                for (wj, v) in w.iter_mut().zip(xi) {
                    *wj += step * v;
                }
                wb += step * bs;
            }
        }
        if used % GAP_CHECK_EVERY != 0 && used < params.max_epochs {
            continue;
        }
        let half_norm = 0.5 * (dot(&w, &w) + wb * wb);
        let hinge: f64 = x.iter().zip(y).map(|(xi, yi)| (1.0 - yi * (dot(&w, xi) + wb * bs)).max(0.0)).sum();
        let primal = half_norm + c * hinge;
        let dual = alpha.iter().sum::<f64>() - half_norm;
        if primal - dual <= params.tol * primal.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    (w, wb * bs, used)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    fn blobs(classes: usize, per: usize, dim: usize, spread: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers: Vec<Vec<f64>> = (0..classes).map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) * 3.0).collect()).collect();
        let mut x = Array2::zeros((classes * per, dim));
        let mut y = Vec::new();
        for c in 0..classes {
            for i in 0..per {
                for j in 0..dim {
                    x[[c * per + i, j]] = centers[c][j] + spread * rng.sample::<f64, _>(StandardNormal);
                }
                y.push(c);
            }
        }
        (x, y)
    }

    #[test]
    fn separable_line_is_learned_perfectly() {
        let mut x = Array2::zeros((20, 1));
        let mut y = Vec::new();
        for i in 0..20 {
            x[[i, 0]] = if i < 10 { -1.0 } else { 1.0 };
            y.push(usize::from(i >= 10));
        }
        let svm = train_svm(&x, &y, &names(2), &SvmParams::default()).unwrap();
        for i in 0..20 {
            assert_eq!(svm.predict(&[x[[i, 0]]]).unwrap(), y[i]);
        }
    }

    #[test]
    fn duplicated_columns_match_rescaled_model() {
        let (x, y) = blobs(3, 15, 4, 1.5, 1);
        let xx = ndarray::concatenate(ndarray::Axis(1), &[x.view(), x.view()]).unwrap();
        let p = SvmParams { reg_c: 0.7, bias_scale: 1.0, tol: 1e-10, max_epochs: 5000, seed: 4 };
        let orig = SvmParams { reg_c: 1.4, bias_scale: 1.0 / 2f64.sqrt(), ..p.clone() };
        let a = train_svm(&xx, &y, &names(3), &p).unwrap();
        let b = train_svm(&x, &y, &names(3), &orig).unwrap();
        for i in 0..x.nrows() {
            let row = x.row(i).to_vec();
            let mut doubled = row.clone();
            doubled.extend(&row);
            let da = a.decision_values(&doubled).unwrap();
            let db = b.decision_values(&row).unwrap();
            for (u, v) in da.iter().zip(&db) {
                assert!((u - v).abs() < 1e-6, "{u} vs {v}");
            }
        }
        // the weights themselves are the halved originals
        for k in 0..3 {
            for j in 0..4 {
                assert!((a.weights[[k, j]] - b.weights[[k, j]] / 2.0).abs() < 1e-6);
                assert!((a.weights[[k, j + 4]] - b.weights[[k, j]] / 2.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn permuted_labels_permute_outputs() {
        let (x, y) = blobs(4, 10, 3, 2.5, 2);
        let perm = [2usize, 0, 3, 1];
        let yp: Vec<usize> = y.iter().map(|&c| perm[c]).collect();
        let a = train_svm(&x, &y, &names(4), &SvmParams::default()).unwrap();
        let b = train_svm(&x, &yp, &names(4), &SvmParams::default()).unwrap();
        for i in 0..x.nrows() {
            let row = x.row(i).to_vec();
            assert_eq!(perm[a.predict(&row).unwrap()], b.predict(&row).unwrap());
            let da = a.decision_values(&row).unwrap();
            let db = b.decision_values(&row).unwrap();
            for c in 0..4 {
                assert_eq!(da[c], db[perm[c]]);
            }
        }
    }

    #[test]
    fn constant_column_gets_unit_std() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| if j == 0 { 5.0 } else { i as f64 });
        let s = Scaler::fit(&x);
        assert_eq!(s.std[0], 1.0);
        assert_eq!(s.mean[0], 5.0);
    }

    #[test]
    fn errors() {
        let x = Array2::zeros((4, 2));
        assert!(matches!(train_svm(&x, &[0, 0, 0, 0], &names(1), &SvmParams::default()), Err(LearnError::SingleClass)));
        let mut bad = Array2::zeros((2, 2));
        bad[[0, 0]] = f64::NAN;
        assert!(matches!(train_svm(&bad, &[0, 1], &names(2), &SvmParams::default()), Err(LearnError::NonFinite)));
        let (x, y) = blobs(2, 5, 3, 1.0, 3);
        let svm = train_svm(&x, &y, &names(2), &SvmParams::default()).unwrap();
        assert!(matches!(svm.predict_proba(&[1.0]), Err(LearnError::DimensionMismatch { got: 1, expected: 3 })));
    }

    #[test]
    fn training_uses_only_present_classes() {
        let (x, y) = blobs(3, 5, 2, 1.0, 8);
        let y: Vec<usize> = y.iter().map(|&c| [0, 2, 5][c]).collect();
        let svm = train_svm(&x, &y, &names(6), &SvmParams::default()).unwrap();
        assert_eq!(svm.classes, vec![0, 2, 5]);
        assert_eq!(svm.class_names, vec!["c0", "c2", "c5"]);
    }

    #[test]
    fn softmax_cases() {
        assert_eq!(softmax(&[2.0, 2.0, 2.0, 2.0]), vec![0.25; 4]);
        assert!(softmax(&[50.0, 0.0, -1.0])[0] >= 0.99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn probabilities_match_reference_softmax(seed in any::<u64>()) {
            let (x, y) = blobs(3, 6, 5, 2.0, seed);
            let svm = train_svm(&x, &y, &names(3), &SvmParams { max_epochs: 50, ..Default::default() }).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let q: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let p = svm.predict_proba(&q).unwrap();
            let expect = csisense_oracle::softmax(&svm.decision_values(&q).unwrap());
            for (a, b) in p.iter().zip(&expect) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert_eq!(argmax(&p), argmax(&svm.decision_values(&q).unwrap()));
        }

        #[test]
        fn positive_scaling_keeps_argmax(v in proptest::collection::vec(-10.0f64..10.0, 2..8), s in 0.01f64..100.0) {
            let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
            prop_assert_eq!(argmax(&softmax(&v)), argmax(&softmax(&scaled)));
        }
    }
}
