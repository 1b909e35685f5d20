use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError, LearnerSpec, Model};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ClassMetrics {
    pub fn from_counts(label: impl Into<String>, tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        let precision = ratio(tp, fp);
        let recall = ratio(tp, fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { label: label.into(), tp, fp, fn_, support: tp + fn_, precision, recall, f1 }
    }
}

/// Per-class and macro-averaged precision, recall and F1 with the confusion
/// matrix indexed `[actual][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn from_predictions(label_set: &[String], actual: &[usize], predicted: &[usize]) -> Self {
        let k = label_set.len();
        let mut confusion = vec![vec![0; k]; k];
        for (&a, &p) in actual.iter().zip(predicted) {
            confusion[a][p] += 1;
        }
        let per_class: Vec<ClassMetrics> = (0..k)
            .map(|c| {
                let tp = confusion[c][c];
                let fp = (0..k).filter(|&a| a != c).map(|a| confusion[a][c]).sum();
                let fn_ = (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum();
                ClassMetrics::from_counts(&label_set[c], tp, fp, fn_)
            })
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if k == 0 {
                0.0
            } else {
                per_class.iter().map(f).sum::<f64>() / k as f64
            }
        };
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        Self {
            macro_precision: mean(|m| m.precision),
            macro_recall: mean(|m| m.recall),
            macro_f1: mean(|m| m.f1),
            accuracy: if actual.is_empty() { 0.0 } else { correct as f64 / actual.len() as f64 },
            per_class,
            confusion,
        }
    }

    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|m| m.label == label)
    }

    /// Tab-separated table: one row per class plus a `macro` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("class\tprecision\trecall\tf1\tsupport\n");
        for m in &self.per_class {
            let _ = writeln!(out, "{}\t{:.4}\t{:.4}\t{:.4}\t{}", m.label, m.precision, m.recall, m.f1, m.support);
        }
        let support: usize = self.per_class.iter().map(|m| m.support).sum();
        let _ = writeln!(
            out,
            "macro\t{:.4}\t{:.4}\t{:.4}\t{}",
            self.macro_precision, self.macro_recall, self.macro_f1, support
        );
        out
    }
}

pub fn evaluate(model: &Model, test: &Dataset) -> Result<EvalReport, LearnError> {
    model.check_compatible(test)?;
    let actual = test.labels();
    let predicted: Vec<usize> = test.rows().iter().map(|r| model.predict(&r.x)).collect();
    Ok(EvalReport::from_predictions(test.label_set(), &actual, &predicted))
}

/// Stratified fold assignment.
///
/// Row indices are grouped by label (label order), each group is shuffled
/// in turn with one seeded stream, the groups are concatenated and position
/// `p` goes to fold `p % folds`. Fold sizes differ by at most one overall
/// and per label.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, LearnError> {
    if folds < 2 || folds > labels.len() {
        return Err(LearnError::TooFewRows { folds, rows: labels.len() });
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = SplitMix64::new(seed);
    let mut order = Vec::with_capacity(labels.len());
    for class in 0..n_classes {
        let mut group: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut group);
        order.extend(group);
    }
    let mut out = vec![Vec::new(); folds];
    for (p, i) in order.into_iter().enumerate() {
        out[p % folds].push(i);
    }
    for fold in &mut out {
        fold.sort_unstable();
    }
    Ok(out)
}

/// k-fold cross-validation with pooled predictions.
///
/// Each fold is scored by a model trained on the remaining folds; model
/// seeds are drawn in fold order from a stream forked off `seed`.
pub fn cross_validate(data: &Dataset, folds: usize, spec: &LearnerSpec, seed: u64) -> Result<EvalReport, LearnError> {
    let labels = data.labels();
    let assignment = stratified_folds(&labels, folds, seed)?;
    let mut seeds = SplitMix64::new(seed).fork();
    let mut predicted = vec![0; data.len()];
    for test_idx in &assignment {
        let train_idx: Vec<usize> = (0..data.len()).filter(|i| test_idx.binary_search(i).is_err()).collect();
        let model = spec.fit(&data.subset(&train_idx), seeds.next_u64())?;
        for &i in test_idx {
            predicted[i] = model.predict(&data.rows()[i].x);
        }
    }
    Ok(EvalReport::from_predictions(data.label_set(), &labels, &predicted))
}
