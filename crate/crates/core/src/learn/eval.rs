use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fusion::{fit_fusion, FusionConfig, FusionModel};
use super::{Dataset, LabelKind, LearnError, Sample};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    /// Stratified, seeded k-fold cross-validation.
    KFold { k: usize },
    /// Each distinct value of `group` is held out once.
    LeaveGroupOut { group: LabelKind },
    /// k-fold where every test sample is first assigned a location and then
    /// classified by that location's model.
    TwoStage { k: usize },
    /// Leave-one-group-out, training on every `m`-subset of the remaining
    /// groups for each `m` in `sizes`.
    TrainSubsetScaling { group: LabelKind, sizes: Vec<usize> },
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::KFold { k } => write!(f, "kfold(k={k})"),
            Protocol::LeaveGroupOut { group } => write!(f, "leave-one-{group}-out"),
            Protocol::TwoStage { k } => write!(f, "two-stage(k={k})"),
            Protocol::TrainSubsetScaling { group, sizes } => {
                let s: Vec<String> = sizes.iter().map(|m| m.to_string()).collect();
                write!(f, "train-subset-scaling({group}; m={})", s.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample: usize,
    pub truth: usize,
    pub predicted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: String,
    pub target: LabelKind,
    pub seed: u64,
    pub class_names: Vec<String>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub per_fold: Vec<f64>,
    /// Protocol-specific figures, e.g. the location-stage accuracy.
    pub extras: Vec<(String, f64)>,
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    fn new(protocol: &Protocol, target: LabelKind, seed: u64, class_names: Vec<String>) -> Self {
        let c = class_names.len();
        EvalReport {
            protocol: protocol.to_string(),
            target,
            seed,
            class_names,
            confusion: vec![vec![0; c]; c],
            accuracy: 0.0,
            per_fold: Vec::new(),
            extras: Vec::new(),
            predictions: Vec::new(),
        }
    }

    fn record(&mut self, preds: &[Prediction]) {
        for p in preds {
            self.confusion[p.truth][p.predicted] += 1;
        }
        self.predictions.extend_from_slice(preds);
        self.accuracy = confusion_accuracy(&self.confusion);
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    /// Accuracy restricted to the given sample indices.
    pub fn accuracy_on(&self, samples: &[usize]) -> f64 {
        let hits: Vec<bool> = self
            .predictions
            .iter()
            .filter(|p| samples.contains(&p.sample))
            .map(|p| p.truth == p.predicted)
            .collect();
        hits.iter().filter(|&&h| h).count() as f64 / hits.len().max(1) as f64
    }

    pub fn extra(&self, name: &str) -> Option<f64> {
        self.extras.iter().find(|(n, _)| n == name).map(|e| e.1)
    }
}

fn confusion_accuracy(c: &[Vec<u64>]) -> f64 {
    let total: u64 = c.iter().flatten().sum();
    let diag: u64 = (0..c.len()).map(|i| c[i][i]).sum();
    diag as f64 / total.max(1) as f64
}

fn fold_accuracy(p: &[Prediction]) -> f64 {
    p.iter().filter(|p| p.truth == p.predicted).count() as f64 / p.len().max(1) as f64
}

/// Stratified fold assignment: each class is shuffled with the seed and
/// dealt round-robin, continuing where the previous class stopped.
pub fn stratified_folds(y: &[usize], k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Test-index sets, one per distinct value of `group` in sorted order.
pub fn group_folds(ds: &Dataset, group: LabelKind) -> (Vec<String>, Vec<Vec<usize>>) {
    let (names, ids) = ds.labels(group);
    let folds = (0..names.len()).map(|g| (0..ds.len()).filter(|&i| ids[i] == g).collect()).collect();
    (names, folds)
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut mark = vec![false; n];
    test.iter().for_each(|&i| mark[i] = true);
    (0..n).filter(|&i| !mark[i]).collect()
}

fn check_coverage(y: &[usize], names: &[String], train_sets: &[Vec<usize>]) -> Result<(), LearnError> {
    let mut seen = vec![false; names.len()];
    for t in train_sets {
        t.iter().for_each(|&i| seen[y[i]] = true);
    }
    match seen.iter().position(|s| !s) {
        Some(c) => Err(LearnError::ClassNeverTrained(names[c].clone())),
        None => Ok(()),
    }
}

/// Trains on `train`, predicts `test`.
pub fn train_and_test(
    ds: &Dataset,
    y: &[usize],
    names: &[String],
    train: &[usize],
    test: &[usize],
    cfg: &FusionConfig,
) -> Result<(FusionModel, Vec<Prediction>), LearnError> {
    let samples: Vec<&Sample> = train.iter().map(|&i| &ds.samples[i]).collect();
    let ty: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let model = fit_fusion(&samples, &ty, names, cfg)?;
    let preds = test
        .iter()
        .map(|&i| Ok(Prediction { sample: i, truth: y[i], predicted: model.predict_sample(&ds.samples[i])?.0 }))
        .collect::<Result<Vec<_>, LearnError>>()?;
    Ok((model, preds))
}

fn run_folds(
    ds: &Dataset,
    y: &[usize],
    names: &[String],
    folds: &[Vec<usize>],
    cfg: &FusionConfig,
) -> Result<Vec<Vec<Prediction>>, LearnError> {
    let trains: Vec<Vec<usize>> = folds.iter().map(|t| complement(ds.len(), t)).collect();
    check_coverage(y, names, &trains)?;
    folds
        .par_iter()
        .zip(&trains)
        .filter(|(test, _)| !test.is_empty())
        .map(|(test, train)| train_and_test(ds, y, names, train, test, cfg).map(|r| r.1))
        .collect()
}

/// Evaluates `cfg` on `ds` predicting `target` under `protocol`.
pub fn cross_validate(
    ds: &Dataset,
    target: LabelKind,
    protocol: &Protocol,
    cfg: &FusionConfig,
    seed: u64,
) -> Result<EvalReport, LearnError> {
    let (names, y) = ds.labels(target);
    let mut report = EvalReport::new(protocol, target, seed, names.clone());
    match protocol {
        Protocol::KFold { k } => {
            check_k(ds.len(), *k)?;
            let folds = stratified_folds(&y, *k, seed);
            for p in run_folds(ds, &y, &names, &folds, cfg)? {
                report.per_fold.push(fold_accuracy(&p));
                report.record(&p);
            }
        }
        Protocol::LeaveGroupOut { group } => {
            let (groups, folds) = group_folds(ds, *group);
            if groups.len() < 2 {
                return Err(LearnError::TooFewGroups(groups.len()));
            }
            for p in run_folds(ds, &y, &names, &folds, cfg)? {
                report.per_fold.push(fold_accuracy(&p));
                report.record(&p);
            }
        }
        Protocol::TwoStage { k } => {
            check_k(ds.len(), *k)?;
            let folds = stratified_folds(&y, *k, seed);
            let trains: Vec<Vec<usize>> = folds.iter().map(|t| complement(ds.len(), t)).collect();
            check_coverage(&y, &names, &trains)?;
            let (loc_names, loc_y) = ds.labels(LabelKind::Location);
            let results = folds
                .par_iter()
                .zip(&trains)
                .filter(|(test, _)| !test.is_empty())
                .map(|(test, train)| {
                    let model = TwoStageModel::fit(ds, train, &y, &names, &loc_y, &loc_names, cfg)?;
                    let mut routed = Vec::new();
                    let (mut loc_hits, mut oracle_hits) = (0usize, 0usize);
                    for &i in test {
                        let (loc, action) = two_stage_classify(&model, &ds.samples[i])?;
                        loc_hits += usize::from(loc == loc_y[i]);
                        routed.push(Prediction { sample: i, truth: y[i], predicted: action });
                        let direct = model.action_for(loc_y[i], &ds.samples[i])?;
                        oracle_hits += usize::from(direct == y[i]);
                    }
                    Ok((routed, loc_hits, oracle_hits))
                })
                .collect::<Result<Vec<_>, LearnError>>()?;
            let (mut loc_total, mut oracle_total, mut n) = (0, 0, 0);
            for (p, l, o) in results {
                report.per_fold.push(fold_accuracy(&p));
                n += p.len();
                loc_total += l;
                oracle_total += o;
                report.record(&p);
            }
            report.extras.push(("location_accuracy".into(), loc_total as f64 / n.max(1) as f64));
            report.extras.push(("oracle_route_accuracy".into(), oracle_total as f64 / n.max(1) as f64));
        }
        Protocol::TrainSubsetScaling { group, sizes } => {
            let (groups, folds) = group_folds(ds, *group);
            let g = groups.len();
            if g < 2 {
                return Err(LearnError::TooFewGroups(g));
            }
            if let Some(&m) = sizes.iter().find(|&&m| m == 0 || m >= g) {
                return Err(LearnError::InvalidParameter(format!("training subset size {m} with {g} groups")));
            }
            let largest = sizes.iter().copied().max().unwrap_or(0);
            for &m in sizes {
                let mut jobs = Vec::new();
                for held in 0..g {
                    let others: Vec<usize> = (0..g).filter(|&o| o != held).collect();
                    for combo in combinations(&others, m) {
                        let train: Vec<usize> = combo.iter().flat_map(|&o| folds[o].iter().copied()).collect();
                        jobs.push((held, train));
                    }
                }
                let results = jobs
                    .par_iter()
                    .map(|(held, train)| {
                        let mut train = train.clone();
                        train.sort_unstable();
                        train_and_test(ds, &y, &names, &train, &folds[*held], cfg).map(|r| r.1)
                    })
                    .collect::<Result<Vec<_>, LearnError>>()?;
                let mean = results.iter().map(|p| fold_accuracy(p)).sum::<f64>() / results.len() as f64;
                report.per_fold.push(mean);
                report.extras.push((format!("mean_accuracy_m{m}"), mean));
                if m == largest {
                    for p in &results {
                        report.record(p);
                    }
                }
            }
            report.accuracy = report.extra(&format!("mean_accuracy_m{largest}")).unwrap_or(0.0);
        }
    }
    Ok(report)
}

fn check_k(n: usize, k: usize) -> Result<(), LearnError> {
    if k < 2 || n < k {
        return Err(LearnError::TooFewSamples { n, k });
    }
    Ok(())
}

/// All `m`-element subsets of `items`, lexicographic.
pub fn combinations(items: &[usize], m: usize) -> Vec<Vec<usize>> {
    fn go(items: &[usize], m: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, m, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, m, 0, &mut Vec::new(), &mut out);
    out
}

/// Location classifier plus one action model per location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageModel {
    pub location_names: Vec<String>,
    /// `None` when training saw a single location.
    pub location_model: Option<FusionModel>,
    /// Indexed by location id; `None` where the location's training data
    /// has fewer than two target classes.
    pub action_models: Vec<Option<FusionModel>>,
    /// Location id used when `location_model` is `None`.
    pub only_location: usize,
    /// Class id for locations whose training data has a single class.
    pub constant_action: Vec<Option<usize>>,
}

impl TwoStageModel {
    pub fn fit(
        ds: &Dataset,
        train: &[usize],
        y: &[usize],
        names: &[String],
        loc_y: &[usize],
        loc_names: &[String],
        cfg: &FusionConfig,
    ) -> Result<Self, LearnError> {
        let samples: Vec<&Sample> = train.iter().map(|&i| &ds.samples[i]).collect();
        let ly: Vec<usize> = train.iter().map(|&i| loc_y[i]).collect();
        let mut present: Vec<usize> = ly.clone();
        present.sort_unstable();
        present.dedup();
        let location_model =
            if present.len() > 1 { Some(fit_fusion(&samples, &ly, loc_names, cfg)?) } else { None };
        let mut action_models = Vec::with_capacity(loc_names.len());
        let mut constant_action = Vec::with_capacity(loc_names.len());
        for l in 0..loc_names.len() {
            let idx: Vec<usize> = train.iter().copied().filter(|&i| loc_y[i] == l).collect();
            let mut classes: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
            classes.sort_unstable();
            classes.dedup();
            if classes.len() >= 2 {
                let s: Vec<&Sample> = idx.iter().map(|&i| &ds.samples[i]).collect();
                let ty: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
                action_models.push(Some(fit_fusion(&s, &ty, names, cfg)?));
                constant_action.push(None);
            } else {
                action_models.push(None);
                constant_action.push(classes.first().copied());
            }
        }
        Ok(TwoStageModel {
            location_names: loc_names.to_vec(),
            location_model,
            action_models,
            only_location: present.first().copied().unwrap_or(0),
            constant_action,
        })
    }

    /// Action prediction with the location given.
    pub fn action_for(&self, location: usize, sample: &Sample) -> Result<usize, LearnError> {
        if let Some(Some(m)) = self.action_models.get(location) {
            return Ok(m.predict_sample(sample)?.0);
        }
        self.constant_action
            .get(location)
            .copied()
            .flatten()
            .ok_or_else(|| LearnError::MissingLocationModel(self.location_names.get(location).cloned().unwrap_or_default()))
    }
}

/// Predicted `(location, target class)`.
pub fn two_stage_classify(model: &TwoStageModel, sample: &Sample) -> Result<(usize, usize), LearnError> {
    let loc = match &model.location_model {
        Some(m) => m.predict_sample(sample)?.0,
        None => model.only_location,
    };
    Ok((loc, model.action_for(loc, sample)?))
}
