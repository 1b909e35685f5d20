//! Page relevance: training, classification and self-training scale-up.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{name_variants, Label, NameVariantSet, PageDocument, PageRecord, Snapshot};
use crate::features::{build_schema, extract_relevance_features, FeatureError, FeatureSchema, FeatureVector, SchemaConfig};
use crate::learners::{Dataset, LearnError, LearnerSpec, Model};

/// Label order used by every relevance dataset; bagging vote ties go to the first.
pub const LABELS: [&str; 2] = ["relevant", "irrelevant"];
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum RelevanceError {
    #[error("need at least two labels of each class (relevant: {relevant}, irrelevant: {irrelevant})")]
    DegenerateLabels { relevant: usize, irrelevant: usize },
    #[error("model schema does not match its feature schema")]
    SchemaMismatch,
    #[error("no unlabeled pages to scale up with")]
    NoUnlabeledData,
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Manual,
    ModelAssigned,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Manual => "manual",
            Provenance::ModelAssigned => "model_assigned",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceVerdict {
    pub page_id: String,
    pub label: Label,
    pub score: f64,
    pub provenance: Provenance,
}

impl RelevanceVerdict {
    fn from_score(page_id: &str, score: f64) -> Self {
        let label = if score >= THRESHOLD { Label::Relevant } else { Label::Irrelevant };
        Self { page_id: page_id.to_string(), label, score, provenance: Provenance::ModelAssigned }
    }
}

/// A relevance classifier bound to the feature schema it was trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceModel {
    pub schema: FeatureSchema,
    pub model: Model,
}

impl RelevanceModel {
    pub fn score(&self, features: &FeatureVector) -> f64 {
        let idx = self.model.label_index(LABELS[0]).unwrap_or(0);
        self.model.proba(features)[idx]
    }

    fn check(&self) -> Result<(), RelevanceError> {
        if empty_dataset(&self.schema).schema_hash() != self.model.schema_hash {
            return Err(RelevanceError::SchemaMismatch);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("relevance model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

fn empty_dataset(schema: &FeatureSchema) -> Dataset {
    Dataset::new(schema.feature_names().iter().cloned(), LABELS)
}

struct ParsedPage<'a> {
    record: &'a PageRecord,
    doc: PageDocument,
}

fn parse_snapshot(snapshot: &Snapshot) -> (NameVariantSet, Vec<ParsedPage<'_>>) {
    let variants = name_variants(&snapshot.target);
    let pages = snapshot
        .pages
        .iter()
        .map(|record| ParsedPage { record, doc: PageDocument::from_record(record) })
        .collect();
    (variants, pages)
}

fn schema_for(parsed: &[(NameVariantSet, Vec<ParsedPage<'_>>)], config: SchemaConfig, labeled_only: bool) -> Result<FeatureSchema, FeatureError> {
    let docs: Vec<(&PageDocument, &NameVariantSet)> = parsed
        .iter()
        .flat_map(|(v, pages)| {
            pages
                .iter()
                .filter(move |p| !labeled_only || p.record.label.is_some())
                .map(move |p| (&p.doc, v))
        })
        .collect();
    build_schema(&docs, config)
}

/// Featurize every labeled page of `snapshots` under `schema`.
pub fn labeled_dataset(snapshots: &[Snapshot], schema: &FeatureSchema) -> Result<Dataset, RelevanceError> {
    let mut data = empty_dataset(schema);
    for snapshot in snapshots {
        let (variants, pages) = parse_snapshot(snapshot);
        for page in pages {
            if let Some(label) = page.record.label {
                let x = extract_relevance_features(&page.doc, page.record, &variants, schema)?;
                data.push(x, label.as_str())?;
            }
        }
    }
    Ok(data)
}

fn check_labels(data: &Dataset) -> Result<(), RelevanceError> {
    let counts = data.class_counts();
    if counts.iter().any(|&c| c < 2) {
        return Err(RelevanceError::DegenerateLabels { relevant: counts[0], irrelevant: counts[1] });
    }
    Ok(())
}

/// Build the schema over the labeled pages, featurize them (each snapshot
/// de-lexicalized against its own target) and fit `spec`.
pub fn train_relevance(
    snapshots: &[Snapshot],
    spec: &LearnerSpec,
    seed: u64,
    schema_config: SchemaConfig,
) -> Result<RelevanceModel, RelevanceError> {
    let labeled = snapshots.iter().flat_map(|s| s.labeled_pages()).fold([0, 0], |mut acc, (_, l)| {
        acc[usize::from(l == Label::Irrelevant)] += 1;
        acc
    });
    if labeled.iter().any(|&c| c < 2) {
        return Err(RelevanceError::DegenerateLabels { relevant: labeled[0], irrelevant: labeled[1] });
    }
    let parsed: Vec<_> = snapshots.iter().map(parse_snapshot).collect();
    let schema = schema_for(&parsed, schema_config, true)?;
    let data = labeled_dataset(snapshots, &schema)?;
    check_labels(&data)?;
    let model = spec.fit(&data, seed)?;
    Ok(RelevanceModel { schema, model })
}

/// One verdict per page, in snapshot order.
pub fn classify_pages(model: &RelevanceModel, snapshot: &Snapshot) -> Result<Vec<RelevanceVerdict>, RelevanceError> {
    model.check()?;
    let (variants, pages) = parse_snapshot(snapshot);
    pages
        .iter()
        .map(|p| {
            let x = extract_relevance_features(&p.doc, p.record, &variants, &model.schema)?;
            Ok(RelevanceVerdict::from_score(&p.record.page_id, model.score(&x)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleUpReport {
    pub assigned_relevant: usize,
    pub assigned_irrelevant: usize,
    /// Pages left out because their score was below `min_confidence`.
    pub skipped_low_confidence: usize,
    pub verdicts: Vec<RelevanceVerdict>,
}

/// Label every unlabeled page with `seed_model`, then retrain `spec` on the
/// manual labels plus the model-assigned ones.
///
/// The seed model's schema is kept so the retrained model stays comparable.
/// Pages that already carry a manual label keep it. A model-assigned label
/// is used only when `max(score, 1 - score) >= min_confidence`.
pub fn self_train_scale_up(
    seed_model: &RelevanceModel,
    labeled: &[Snapshot],
    unlabeled: &[Snapshot],
    spec: &LearnerSpec,
    seed: u64,
    min_confidence: f64,
) -> Result<(RelevanceModel, ScaleUpReport), RelevanceError> {
    seed_model.check()?;
    let schema = &seed_model.schema;
    let mut data = labeled_dataset(labeled, schema)?;
    let mut report = ScaleUpReport {
        assigned_relevant: 0,
        assigned_irrelevant: 0,
        skipped_low_confidence: 0,
        verdicts: Vec::new(),
    };

    for snapshot in unlabeled {
        let (variants, pages) = parse_snapshot(snapshot);
        for page in pages {
            let x = extract_relevance_features(&page.doc, page.record, &variants, schema)?;
            if let Some(label) = page.record.label {
                data.push(x, label.as_str())?;
                report.verdicts.push(RelevanceVerdict {
                    page_id: page.record.page_id.clone(),
                    label,
                    score: if label == Label::Relevant { 1.0 } else { 0.0 },
                    provenance: Provenance::Manual,
                });
                continue;
            }
            let verdict = RelevanceVerdict::from_score(&page.record.page_id, seed_model.score(&x));
            if verdict.score.max(1.0 - verdict.score) < min_confidence {
                report.skipped_low_confidence += 1;
            } else {
                match verdict.label {
                    Label::Relevant => report.assigned_relevant += 1,
                    Label::Irrelevant => report.assigned_irrelevant += 1,
                }
                data.push(x, verdict.label.as_str())?;
            }
            report.verdicts.push(verdict);
        }
    }
    if report.assigned_relevant + report.assigned_irrelevant + report.skipped_low_confidence == 0 {
        return Err(RelevanceError::NoUnlabeledData);
    }
    check_labels(&data)?;
    let model = spec.fit(&data, seed)?;
    Ok((RelevanceModel { schema: schema.clone(), model }, report))
}

/// `page_id, label, score, provenance` rows with a header line.
pub fn verdicts_to_tsv(verdicts: &[RelevanceVerdict]) -> String {
    let mut out = String::from("page_id\tlabel\tscore\tprovenance\n");
    for v in verdicts {
        let _ = writeln!(out, "{}\t{}\t{:.6}\t{}", v.page_id, v.label, v.score, v.provenance.as_str());
    }
    out
}
