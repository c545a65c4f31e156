use std::collections::HashMap;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureKind, FeatureVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KmeansParams {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the relative inertia improvement falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Train on a seeded random subset of at most this many distinct points.
    #[serde(default)]
    pub max_points: Option<usize>,
}

impl Default for KmeansParams {
    fn default() -> Self {
        KmeansParams { k: 48, max_iter: 100, tol: 1e-6, seed: 0, max_points: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// `k × dim`.
    pub centroids: Array2<f64>,
    pub seed: u64,
    /// Assignment steps performed.
    pub iterations: usize,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    /// Index of the nearest centroid, lowest index on ties, with its squared
    /// distance.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        nearest(&self.centroids, x)
    }
}

fn nearest(centroids: &Array2<f64>, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let d: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Distinct points in first-occurrence order with their multiplicities.
fn dedup(points: &[Vec<f64>]) -> (Vec<&[f64]>, Vec<f64>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut uniq: Vec<&[f64]> = Vec::new();
    let mut weight = Vec::new();
    for p in points {
        // +0.0 and -0.0 are the same point
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&i) => weight[i] += 1.0,
            None => {
                index.insert(key, uniq.len());
                uniq.push(p);
                weight.push(1.0);
            }
        }
    }
    (uniq, weight)
}

fn pick(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Weighted k-means: k-means++ seeding then Lloyd iterations. Duplicate
/// points are merged first, so repeating the whole dataset leaves the result
/// unchanged.
pub fn train_codebook(descs: &[Vec<f64>], params: &KmeansParams) -> Result<Codebook, FeatureError> {
    let k = params.k;
    let (mut pts, mut w) = dedup(descs);
    if k == 0 || pts.len() < k {
        return Err(FeatureError::TooFewDistinct { k, distinct: pts.len() });
    }
    let dim = pts[0].len();
    if let Some(bad) = pts.iter().find(|p| p.len() != dim) {
        return Err(FeatureError::DimensionMismatch { got: bad.len(), expected: dim });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    if let Some(m) = params.max_points.filter(|&m| m >= k && m < pts.len()) {
        let mut idx = sample(&mut rng, pts.len(), m).into_vec();
        idx.sort_unstable();
        pts = idx.iter().map(|&i| pts[i]).collect();
        w = idx.iter().map(|&i| w[i]).collect();
    }

    let mut centroids = Array2::zeros((k, dim));
    let first = pick(&mut rng, &w);
    centroids.row_mut(0).assign(&ndarray::ArrayView1::from(pts[first]));
    let mut d2: Vec<f64> = pts.iter().map(|p| sq_dist(p, pts[first])).collect();
    for c in 1..k {
        let score: Vec<f64> = d2.iter().zip(&w).map(|(d, w)| d * w).collect();
        let i = pick(&mut rng, &score);
        centroids.row_mut(c).assign(&ndarray::ArrayView1::from(pts[i]));
        for (d, p) in d2.iter_mut().zip(&pts) {
            *d = d.min(sq_dist(p, pts[i]));
        }
    }

    let mut history: Vec<f64> = Vec::new();
    for it in 0..params.max_iter.max(1) {
        let assign: Vec<(usize, f64)> = pts.par_iter().map(|p| nearest(&centroids, p)).collect();
        let inertia: f64 = assign.iter().zip(&w).map(|((_, d), w)| d * w).sum();
        let converged = history.last().is_some_and(|&prev| prev - inertia <= params.tol * prev);
        history.push(inertia);
        if converged || inertia == 0.0 || it + 1 == params.max_iter {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut mass = vec![0.0; k];
        for ((c, _), (p, &wi)) in assign.iter().zip(pts.iter().zip(&w)) {
            mass[*c] += wi;
            for (s, v) in sums.row_mut(*c).iter_mut().zip(p.iter()) {
                *s += wi * v;
            }
        }
        for c in 0..k {
            if mass[c] > 0.0 {
                let row = sums.row(c).mapv(|s| s / mass[c]);
                centroids.row_mut(c).assign(&row);
            }
        }
    }
    Ok(Codebook { centroids, seed: params.seed, iterations: history.len(), inertia_history: history })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// L1-normalized histogram of nearest-centroid assignments. An empty list
/// yields the zero histogram and a warning.
pub fn bow_quantize(descs: &[Vec<f64>], cb: &Codebook, pair: usize) -> Result<FeatureVector, FeatureError> {
    let mut hist = vec![0.0; cb.k()];
    if descs.is_empty() {
        log::warn!("no descriptors for pair {pair}; using an all-zero histogram");
        return Ok(FeatureVector { values: hist, kind: FeatureKind::BowSift, pair });
    }
    for d in descs {
        if d.len() != cb.dim() {
            return Err(FeatureError::DimensionMismatch { got: d.len(), expected: cb.dim() });
        }
        hist[cb.nearest(d).0] += 1.0;
    }
    let n = descs.len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    Ok(FeatureVector { values: hist, kind: FeatureKind::BowSift, pair })
}
