//! Classical supervised learners, evaluation, cross-validation and
//! information-gain feature ranking.
//!
//! Every learner works on the same [`Dataset`] of sparse [`FeatureVector`]s,
//! densified over the dataset's feature list (kept in lexicographic order so
//! tie-breaks by feature name fall out of column order). Training is fully
//! deterministic given the data, the [`LearnerSpec`] and the seed.

mod bagging;
mod bayes;
mod eval;
mod infogain;
mod knn;
mod logistic;
mod tree;

use serde::{Deserialize, Serialize};

use crate::digest::short_hash;
use crate::features::FeatureVector;

pub use bagging::{Bagging, Bootstrap};
pub use bayes::NaiveBayes;
pub use eval::{cross_validate, evaluate, stratified_folds, ClassMetrics, EvalReport};
pub use infogain::{entropy, information_gain_ranking};
pub use knn::KNearest;
pub use logistic::{logistic_loss_and_gradient, LogisticRegression};
pub use tree::{DecisionTree, TreeNode};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LearnError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("k = {k} exceeds the {rows} training rows")]
    KTooLarge { k: usize, rows: usize },
    #[error("cannot split {rows} rows into {folds} folds")]
    TooFewRows { folds: usize, rows: usize },
    #[error("schema mismatch: model {expected}, data {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub x: FeatureVector,
    pub y: usize,
}

/// Labeled rows over a fixed feature list and ordered label set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<String>,
    label_set: Vec<String>,
    rows: Vec<Row>,
}

impl Dataset {
    pub fn new<F, L>(features: F, label_set: L) -> Self
    where
        F: IntoIterator,
        F::Item: Into<String>,
        L: IntoIterator,
        L::Item: Into<String>,
    {
        let mut features: Vec<String> = features.into_iter().map(Into::into).collect();
        features.sort();
        features.dedup();
        Self {
            features,
            label_set: label_set.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, x: FeatureVector, label: &str) -> Result<(), LearnError> {
        let y = self
            .label_index(label)
            .ok_or_else(|| LearnError::UnknownLabel(label.to_string()))?;
        self.rows.push(Row { x, y });
        Ok(())
    }

    pub fn push_index(&mut self, x: FeatureVector, y: usize) {
        assert!(y < self.label_set.len(), "label index out of range");
        self.rows.push(Row { x, y });
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.y).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for r in &self.rows {
            counts[r.y] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order; repeats allowed.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            label_set: self.label_set.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn extend_from(&mut self, other: &Dataset) -> Result<(), LearnError> {
        if other.schema_hash() != self.schema_hash() {
            return Err(LearnError::SchemaMismatch { expected: self.schema_hash(), found: other.schema_hash() });
        }
        self.rows.extend(other.rows.iter().cloned());
        Ok(())
    }

    /// Hash of the feature list and label set.
    pub fn schema_hash(&self) -> String {
        schema_hash(&self.features, &self.label_set)
    }

    pub fn densify(&self, x: &FeatureVector) -> Vec<f64> {
        densify(&self.features, x)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| self.densify(&r.x)).collect()
    }
}

fn schema_hash(features: &[String], labels: &[String]) -> String {
    let mut buf = features.join("\n");
    buf.push('\u{1f}');
    buf.push_str(&labels.join("\n"));
    short_hash(buf.as_bytes())
}

/// Dense view of `x` over sorted `features`; unknown names are ignored.
pub fn densify(features: &[String], x: &FeatureVector) -> Vec<f64> {
    let mut dense = vec![0.0; features.len()];
    for (name, value) in x.iter() {
        if let Ok(j) = features.binary_search_by(|f| f.as_str().cmp(name)) {
            dense[j] = value;
        }
    }
    dense
}

/// Learner choice and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerSpec {
    DecisionTree { max_depth: usize, min_leaf: usize },
    NaiveBayes,
    LogisticRegression { l2: f64, lr: f64, epochs: usize },
    KNearest { k: usize },
    Bagging { n_estimators: usize, base: Box<LearnerSpec> },
}

impl LearnerSpec {
    pub fn decision_tree() -> Self {
        LearnerSpec::DecisionTree { max_depth: 20, min_leaf: 2 }
    }

    pub fn logistic_regression() -> Self {
        LearnerSpec::LogisticRegression { l2: 1e-3, lr: 0.1, epochs: 200 }
    }

    pub fn knn() -> Self {
        LearnerSpec::KNearest { k: 5 }
    }

    pub fn bagging() -> Self {
        LearnerSpec::Bagging { n_estimators: 25, base: Box::new(Self::decision_tree()) }
    }

    /// Parse a short learner name (`tree`, `bayes`, `logistic`, `knn`, `bagging`) into its defaults.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "tree" | "decision_tree" | "j48" => Self::decision_tree(),
            "bayes" | "naive_bayes" => LearnerSpec::NaiveBayes,
            "logistic" | "logistic_regression" | "lr" => Self::logistic_regression(),
            "knn" | "k_nearest" => Self::knn(),
            "bagging" => Self::bagging(),
            _ => return None,
        })
    }

    pub fn fit(&self, data: &Dataset, seed: u64) -> Result<Model, LearnError> {
        self.fit_with(data, seed, Bootstrap::Sampled)
    }

    /// Like [`fit`](Self::fit); `bootstrap` selects the bagging sample mode.
    pub fn fit_with(&self, data: &Dataset, seed: u64, bootstrap: Bootstrap) -> Result<Model, LearnError> {
        if data.is_empty() {
            return Err(LearnError::EmptyDataset);
        }
        let x = data.dense();
        let y = data.labels();
        let learned = fit_learned(self, &x, &y, data.label_set().len(), seed, bootstrap)?;
        Ok(Model {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: data.schema_hash(),
            features: data.features().to_vec(),
            label_set: data.label_set().to_vec(),
            spec: self.clone(),
            seed,
            learned,
        })
    }
}

pub(crate) fn fit_learned(
    spec: &LearnerSpec,
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    seed: u64,
    bootstrap: Bootstrap,
) -> Result<Learned, LearnError> {
    if x.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    Ok(match spec {
        LearnerSpec::DecisionTree { max_depth, min_leaf } => {
            Learned::DecisionTree(DecisionTree::fit(x, y, n_classes, *max_depth, (*min_leaf).max(1)))
        }
        LearnerSpec::NaiveBayes => Learned::NaiveBayes(NaiveBayes::fit(x, y, n_classes)),
        LearnerSpec::LogisticRegression { l2, lr, epochs } => {
            if !(l2.is_finite() && *l2 >= 0.0 && lr.is_finite() && *lr > 0.0) {
                return Err(LearnError::InvalidParameter(format!("l2={l2} lr={lr}")));
            }
            Learned::LogisticRegression(LogisticRegression::fit(x, y, n_classes, *l2, *lr, *epochs))
        }
        LearnerSpec::KNearest { k } => Learned::KNearest(KNearest::fit(x, y, n_classes, *k)?),
        LearnerSpec::Bagging { n_estimators, base } => {
            if *n_estimators == 0 {
                return Err(LearnError::InvalidParameter("n_estimators must be at least 1".into()));
            }
            Learned::Bagging(Bagging::fit(x, y, n_classes, *n_estimators, base, seed, bootstrap)?)
        }
    })
}

/// Learned state of one model, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Learned {
    DecisionTree(DecisionTree),
    NaiveBayes(NaiveBayes),
    LogisticRegression(LogisticRegression),
    KNearest(KNearest),
    Bagging(Bagging),
}

impl Learned {
    /// Class scores summing to 1 (vote or leaf fractions for non-probabilistic learners).
    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Learned::DecisionTree(m) => m.proba(x),
            Learned::NaiveBayes(m) => m.proba(x),
            Learned::LogisticRegression(m) => m.proba(x),
            Learned::KNearest(m) => m.proba(x),
            Learned::Bagging(m) => m.proba(x),
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Learned::KNearest(m) => m.predict(x),
            other => argmax(&other.proba(x)),
        }
    }
}

/// First index of the maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A trained model with its schema binding. Serializes to versioned JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub schema_hash: String,
    pub features: Vec<String>,
    pub label_set: Vec<String>,
    pub spec: LearnerSpec,
    pub seed: u64,
    pub learned: Learned,
}

impl Model {
    pub fn proba(&self, x: &FeatureVector) -> Vec<f64> {
        self.learned.proba(&densify(&self.features, x))
    }

    pub fn predict(&self, x: &FeatureVector) -> usize {
        self.learned.predict(&densify(&self.features, x))
    }

    pub fn predict_label(&self, x: &FeatureVector) -> &str {
        &self.label_set[self.predict(x)]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    pub fn check_compatible(&self, data: &Dataset) -> Result<(), LearnError> {
        let found = data.schema_hash();
        if found != self.schema_hash {
            return Err(LearnError::SchemaMismatch { expected: self.schema_hash.clone(), found });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}
