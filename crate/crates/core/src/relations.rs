//! Relation typing between the target and its related entities: CV-section
//! distant supervision, context features and per-type binary classifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::extraction::{EntityMention, EntityRef};
use crate::features::{FeatureSchema, FeatureVector};
use crate::learners::{cross_validate, Dataset, EvalReport, LearnError, LearnerSpec, Model};
use crate::rng::SplitMix64;
use crate::text::tokenize;

pub const THRESHOLD: f64 = 0.5;
const LABELS: [&str; 2] = ["positive", "negative"];

#[derive(Debug, thiserror::Error)]
pub enum RelationError {
    #[error("relation type {0} has fewer than two positive examples")]
    InsufficientPositives(RelationType),
    #[error("relation type {ty} needs {needed} negatives, only {available} available")]
    InsufficientNegatives { ty: RelationType, needed: usize, available: usize },
    #[error("relation models do not match their feature schema")]
    SchemaMismatch,
    #[error("malformed CV: {0}")]
    MalformedCv(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Learn(#[from] LearnError),
}

/// A relation label. The scholar scheme uses `education`, `employment`,
/// `publications` and `other`; other schemes may define any label set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationType(String);

impl RelationType {
    pub fn new(name: &str) -> Self {
        Self(name.trim().to_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Maps CV section titles to relation types (first matching rule wins, title
/// keywords matched case-insensitively against title words) and names the fallback
/// type used when no classifier fires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationScheme {
    pub types: Vec<RelationType>,
    pub fallback: RelationType,
    pub title_rules: Vec<TitleRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TitleRule {
    pub keywords: Vec<String>,
    pub relation: RelationType,
}

impl RelationScheme {
    pub fn scholar() -> Self {
        let rule = |words: &[&str], ty: &str| TitleRule {
            keywords: words.iter().map(|w| w.to_string()).collect(),
            relation: RelationType::new(ty),
        };
        Self {
            types: ["education", "employment", "publications", "other"].map(RelationType::new).to_vec(),
            fallback: RelationType::new("other"),
            title_rules: vec![
                rule(&["education", "degrees", "studies"], "education"),
                rule(&["employment", "experience", "positions", "appointments", "work"], "employment"),
                rule(&["publications", "papers", "articles", "books"], "publications"),
            ],
        }
    }

    /// Title words are compared to keywords ignoring a trailing plural `s`,
    /// so "Publication History" maps like "Publications".
    pub fn map_title(&self, title: &str) -> Option<&RelationType> {
        let words: Vec<String> = tokenize(title);
        self.title_rules
            .iter()
            .find(|r| {
                r.keywords.iter().any(|k| {
                    let k = k.to_lowercase();
                    words.iter().any(|w| singular(w) == singular(&k))
                })
            })
            .map(|r| &r.relation)
    }

    /// Types that get a dedicated binary classifier: all but the fallback.
    pub fn trained_types(&self) -> impl Iterator<Item = &RelationType> {
        self.types.iter().filter(move |t| **t != self.fallback)
    }
}

fn singular(word: &str) -> &str {
    word.strip_suffix('s').filter(|w| !w.is_empty()).unwrap_or(word)
}

impl Default for RelationScheme {
    fn default() -> Self {
        Self::scholar()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvSection {
    pub title: String,
    pub body: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CvDocument {
    pub sections: Vec<CvSection>,
}

#[derive(Deserialize)]
struct CvJson {
    sections: Vec<CvSectionJson>,
}

#[derive(Deserialize)]
struct CvSectionJson {
    title: String,
    body: String,
}

impl CvDocument {
    /// `{"sections": [{"title": ..., "body": ...}]}`; bodies are tokenized.
    pub fn from_json(text: &str) -> Result<Self, RelationError> {
        let raw: CvJson = serde_json::from_str(text).map_err(|e| RelationError::MalformedCv(e.to_string()))?;
        let mut sections = Vec::with_capacity(raw.sections.len());
        for s in raw.sections {
            if s.title.trim().is_empty() {
                return Err(RelationError::MalformedCv("empty section title".into()));
            }
            sections.push(CvSection { title: s.title, body: tokenize(&s.body) });
        }
        Ok(Self { sections })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RelationError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| RelationError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }
}

fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Label mentions whose surface occurs in CV sections that all map to one
/// relation type. Unmapped sections are ignored; mentions found under two or
/// more distinct types are skipped as ambiguous.
pub fn distant_label<'a>(
    cv: &CvDocument,
    mentions: &'a [EntityMention],
    scheme: &RelationScheme,
) -> Vec<(&'a EntityMention, RelationType)> {
    let mut out = Vec::new();
    for m in mentions {
        let surface = tokenize(&m.entity.name());
        let types: BTreeSet<&RelationType> = cv
            .sections
            .iter()
            .filter(|s| contains_sequence(&s.body, &surface))
            .filter_map(|s| scheme.map_title(&s.title))
            .collect();
        if types.len() == 1 {
            out.push((m, types.into_iter().next().unwrap().clone()));
        }
    }
    out
}

/// Entity tokens with up to five context tokens on each side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationContext {
    pub entity_tokens: Vec<String>,
    pub before: Vec<String>,
    pub after: Vec<String>,
}

impl RelationContext {
    pub fn from_mention(m: &EntityMention) -> Self {
        Self {
            entity_tokens: m.entity.lower_tokens(),
            before: m.context_before.clone(),
            after: m.context_after.clone(),
        }
    }

    /// `ent=` entity tokens, `w=` context words, and `w@d=` context words at
    /// signed distance `d` from the entity.
    pub fn feature_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.entity_tokens {
            out.insert(format!("ent={t}"));
        }
        let n = self.before.len();
        for (i, t) in self.before.iter().enumerate() {
            out.insert(format!("w={t}"));
            out.insert(format!("w@-{}={t}", n - i));
        }
        for (i, t) in self.after.iter().enumerate() {
            out.insert(format!("w={t}"));
            out.insert(format!("w@{}={t}", i + 1));
        }
        out
    }
}

/// Binary features of `context` restricted to the schema.
pub fn encode_relation_features(context: &RelationContext, schema: &FeatureSchema) -> FeatureVector {
    context
        .feature_names()
        .into_iter()
        .filter(|f| schema.in_vocabulary(f))
        .map(|f| (f, 1.0))
        .collect()
}

/// Schema over every feature seen in `contexts`.
pub fn build_relation_schema<'a>(contexts: impl IntoIterator<Item = &'a RelationContext>) -> FeatureSchema {
    let names: BTreeSet<String> = contexts.into_iter().flat_map(RelationContext::feature_names).collect();
    let names: Vec<String> = names.into_iter().collect();
    FeatureSchema::new(names.clone(), names)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub entity: EntityRef,
    pub context: RelationContext,
    pub relation: RelationType,
}

impl LabeledInstance {
    pub fn from_labeled_mention(m: &EntityMention, relation: RelationType) -> Self {
        Self { entity: m.entity.clone(), context: RelationContext::from_mention(m), relation }
    }
}

pub fn instances_to_jsonl(instances: &[LabeledInstance]) -> String {
    let mut out = String::new();
    for i in instances {
        out.push_str(&serde_json::to_string(i).expect("instance serializes"));
        out.push('\n');
    }
    out
}

pub fn instances_from_jsonl(text: &str) -> Result<Vec<LabeledInstance>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// All positives of `ty` plus an equal-size sample (without replacement,
/// drawn from `rng`) of the instances of other types.
pub fn balanced_dataset(
    instances: &[LabeledInstance],
    ty: &RelationType,
    schema: &FeatureSchema,
    rng: &mut SplitMix64,
) -> Result<Dataset, RelationError> {
    let (pos, neg): (Vec<&LabeledInstance>, Vec<&LabeledInstance>) = instances.iter().partition(|i| &i.relation == ty);
    if pos.len() < 2 {
        return Err(RelationError::InsufficientPositives(ty.clone()));
    }
    if neg.len() < pos.len() {
        return Err(RelationError::InsufficientNegatives { ty: ty.clone(), needed: pos.len(), available: neg.len() });
    }
    let mut data = Dataset::new(schema.feature_names().iter().cloned(), LABELS);
    for p in &pos {
        data.push(encode_relation_features(&p.context, schema), LABELS[0])?;
    }
    for i in rng.sample_indices(neg.len(), pos.len()) {
        data.push(encode_relation_features(&neg[i].context, schema), LABELS[1])?;
    }
    Ok(data)
}

/// One binary model per trained relation type over a shared schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationModels {
    pub scheme: RelationScheme,
    pub schema: FeatureSchema,
    pub models: BTreeMap<RelationType, Model>,
}

impl RelationModels {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("relation models serialize")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Train a binary classifier per non-fallback type of `scheme`. Each type
/// forks its own stream off `seed` (in scheme order) for negative sampling
/// and the model seed.
pub fn train_relation_classifiers(
    instances: &[LabeledInstance],
    scheme: &RelationScheme,
    spec: &LearnerSpec,
    seed: u64,
) -> Result<RelationModels, RelationError> {
    let schema = build_relation_schema(instances.iter().map(|i| &i.context));
    let mut root = SplitMix64::new(seed);
    let mut models = BTreeMap::new();
    for ty in scheme.trained_types() {
        let mut rng = root.fork();
        let data = balanced_dataset(instances, ty, &schema, &mut rng)?;
        models.insert(ty.clone(), spec.fit(&data, rng.next_u64())?);
    }
    Ok(RelationModels { scheme: scheme.clone(), schema, models })
}

/// Per-type k-fold cross-validation on the same balanced datasets training uses.
pub fn cross_validate_relations(
    instances: &[LabeledInstance],
    scheme: &RelationScheme,
    spec: &LearnerSpec,
    folds: usize,
    seed: u64,
) -> Result<BTreeMap<RelationType, EvalReport>, RelationError> {
    let schema = build_relation_schema(instances.iter().map(|i| &i.context));
    let mut root = SplitMix64::new(seed);
    let mut out = BTreeMap::new();
    for ty in scheme.trained_types() {
        let mut rng = root.fork();
        let data = balanced_dataset(instances, ty, &schema, &mut rng)?;
        out.insert(ty.clone(), cross_validate(&data, folds, spec, rng.next_u64())?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub entity: EntityRef,
    pub context: RelationContext,
    pub assigned_types: BTreeSet<RelationType>,
    pub scores: BTreeMap<RelationType, f64>,
}

/// Types scoring at least 0.5, or the fallback alone when none does.
pub fn assign_types(scores: &BTreeMap<RelationType, f64>, fallback: &RelationType) -> BTreeSet<RelationType> {
    let set: BTreeSet<RelationType> = scores.iter().filter(|(_, &s)| s >= THRESHOLD).map(|(t, _)| t.clone()).collect();
    if set.is_empty() {
        BTreeSet::from([fallback.clone()])
    } else {
        set
    }
}

pub fn classify_relation(models: &RelationModels, entity: &EntityRef, context: &RelationContext) -> Result<RelationInstance, RelationError> {
    let expected = Dataset::new(models.schema.feature_names().iter().cloned(), LABELS).schema_hash();
    let x = encode_relation_features(context, &models.schema);
    let mut scores = BTreeMap::new();
    for (ty, model) in &models.models {
        if model.schema_hash != expected {
            return Err(RelationError::SchemaMismatch);
        }
        let pos = model.label_index(LABELS[0]).unwrap_or(0);
        scores.insert(ty.clone(), model.proba(&x)[pos]);
    }
    Ok(RelationInstance {
        entity: entity.clone(),
        context: context.clone(),
        assigned_types: assign_types(&scores, &models.scheme.fallback),
        scores,
    })
}
