//! Page-relevance feature vectors with target-name de-lexicalization.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{NameVariantSet, PageDocument, PageRecord};
use crate::digest::short_hash;

pub const PLACEHOLDER: &str = "x-person";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("feature schema has an empty vocabulary")]
    SchemaMismatch,
    #[error("cannot build a schema from an empty corpus")]
    EmptyCorpus,
}

/// Sparse named features; absent names read as 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector {
    features: BTreeMap<String, f64>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero values are not stored. Non-finite values are rejected.
    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        assert!(value.is_finite(), "non-finite feature value");
        let name = name.into();
        if value == 0.0 {
            self.features.remove(&name);
        } else {
            self.features.insert(name, value);
        }
    }

    pub fn flag(&mut self, name: impl Into<String>, on: bool) {
        self.set(name, if on { 1.0 } else { 0.0 });
    }

    pub fn get(&self, name: &str) -> f64 {
        self.features.get(name).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.features.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for FeatureVector {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        let mut v = FeatureVector::new();
        for (k, x) in iter {
            v.set(k, x);
        }
        v
    }
}

/// Ordered feature names plus the frozen bag-of-words vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "SchemaRepr", into = "SchemaRepr")]
pub struct FeatureSchema {
    feature_names: Vec<String>,
    vocabulary: Vec<String>,
    vocab_index: BTreeSet<String>,
}

#[derive(Serialize, Deserialize)]
struct SchemaRepr {
    feature_names: Vec<String>,
    vocabulary: Vec<String>,
}

impl From<SchemaRepr> for FeatureSchema {
    fn from(r: SchemaRepr) -> Self {
        FeatureSchema::new(r.feature_names, r.vocabulary)
    }
}

impl From<FeatureSchema> for SchemaRepr {
    fn from(s: FeatureSchema) -> Self {
        SchemaRepr { feature_names: s.feature_names, vocabulary: s.vocabulary }
    }
}

impl FeatureSchema {
    pub fn new(feature_names: Vec<String>, vocabulary: Vec<String>) -> Self {
        let vocab_index = vocabulary.iter().cloned().collect();
        Self { feature_names, vocabulary, vocab_index }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn in_vocabulary(&self, token: &str) -> bool {
        self.vocab_index.contains(token)
    }

    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        short_hash(&json)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    pub min_df: usize,
    pub max_vocab: usize,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self { min_df: 2, max_vocab: 5000 }
    }
}

/// Replace every leftmost-longest variant occurrence with [`PLACEHOLDER`].
pub fn delexicalize(tokens: &[String], variants: &NameVariantSet) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        match variants.longest_match_at(tokens, i) {
            Some(len) => {
                out.push(PLACEHOLDER.to_string());
                i += len;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Social and academic sites recognized from the URL host, with their feature names.
pub const PAGE_TYPES: &[(&str, &str)] = &[
    ("facebook", "pagetype_facebook"),
    ("linkedin", "pagetype_linkedin"),
    ("scholar.google", "pagetype_scholar_google"),
    ("twitter", "pagetype_twitter"),
    ("researchgate", "pagetype_researchgate"),
    ("plus.google", "pagetype_googleplus"),
];

pub const TITLE_HAS_FULL_NAME: &str = "title_has_full_name";
pub const TITLE_HAS_VARIANT: &str = "title_has_variant";
pub const URL_HAS_VARIANT: &str = "url_has_variant";
pub const TITLE_LENGTH: &str = "title_length";
pub const BODY_NAME_COUNT: &str = "body_name_count";
pub const IMAGE_HAS_VARIANT: &str = "image_has_variant";
pub const LEN_LT_50: &str = "len_lt_50";
pub const LEN_LT_100: &str = "len_lt_100";
pub const LEN_LT_500: &str = "len_lt_500";
pub const LEN_GE_500: &str = "len_ge_500";
pub const RANK_FIRST: &str = "rank_first";
pub const BOW_PREFIX: &str = "bow=";

fn fixed_feature_names() -> Vec<String> {
    PAGE_TYPES
        .iter()
        .map(|(_, name)| *name)
        .chain([
            TITLE_HAS_FULL_NAME,
            TITLE_HAS_VARIANT,
            URL_HAS_VARIANT,
            TITLE_LENGTH,
            BODY_NAME_COUNT,
            IMAGE_HAS_VARIANT,
            LEN_LT_50,
            LEN_LT_100,
            LEN_LT_500,
            LEN_GE_500,
            RANK_FIRST,
        ])
        .map(str::to_string)
        .collect()
}

fn delexicalized_terms(doc: &PageDocument, variants: &NameVariantSet) -> BTreeSet<String> {
    [&doc.title_tokens, &doc.url_tokens, &doc.body_tokens]
        .into_iter()
        .flat_map(|field| delexicalize(field, variants))
        .collect()
}

/// Build the relevance schema. Vocabulary keeps de-lexicalized tokens with
/// document frequency at least `min_df`, highest frequency first (ties
/// lexicographic), capped at `max_vocab`.
pub fn build_schema(
    corpus: &[(&PageDocument, &NameVariantSet)],
    config: SchemaConfig,
) -> Result<FeatureSchema, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for (doc, variants) in corpus {
        for term in delexicalized_terms(doc, variants) {
            *df.entry(term).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = df.into_iter().filter(|(_, n)| *n >= config.min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    kept.truncate(config.max_vocab);
    let vocabulary: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();

    let mut names = fixed_feature_names();
    names.extend(vocabulary.iter().map(|t| format!("{BOW_PREFIX}{t}")));
    Ok(FeatureSchema::new(names, vocabulary))
}

fn url_host(url: &str) -> Option<String> {
    let parsed = url::Url::parse(url).or_else(|_| url::Url::parse(&format!("http://{url}"))).ok()?;
    parsed.host_str().map(str::to_ascii_lowercase)
}

/// Site stem match on host labels: `linkedin` matches `www.linkedin.com`,
/// `scholar.google` matches `scholar.google.de`.
pub fn host_matches(host: &str, stem: &str) -> bool {
    format!(".{host}.").contains(&format!(".{stem}."))
}

pub fn extract_relevance_features(
    doc: &PageDocument,
    record: &PageRecord,
    variants: &NameVariantSet,
    schema: &FeatureSchema,
) -> Result<FeatureVector, FeatureError> {
    if schema.vocabulary().is_empty() {
        return Err(FeatureError::SchemaMismatch);
    }
    let mut v = FeatureVector::new();

    for term in delexicalized_terms(doc, variants) {
        if schema.in_vocabulary(&term) {
            v.set(format!("{BOW_PREFIX}{term}"), 1.0);
        }
    }

    if let Some(host) = url_host(&record.url) {
        for (stem, name) in PAGE_TYPES {
            v.flag(*name, host_matches(&host, stem));
        }
    }

    v.flag(TITLE_HAS_FULL_NAME, variants.full_name_occurs_in(&doc.title_tokens));
    v.flag(TITLE_HAS_VARIANT, variants.occurs_in(&doc.title_tokens));
    v.flag(URL_HAS_VARIANT, variants.occurs_in(&doc.url_tokens));
    v.set(TITLE_LENGTH, doc.title_tokens.len() as f64);
    v.set(BODY_NAME_COUNT, variants.find_all(&doc.body_tokens).len() as f64);
    v.flag(IMAGE_HAS_VARIANT, doc.image_captions.iter().any(|c| variants.occurs_in(c)));

    let words = doc.body_word_count;
    v.flag(LEN_LT_50, words < 50);
    v.flag(LEN_LT_100, words < 100);
    v.flag(LEN_LT_500, words < 500);
    v.flag(LEN_GE_500, words >= 500);
    v.flag(RANK_FIRST, record.rank == 1);
    Ok(v)
}
