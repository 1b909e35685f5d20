//! End-to-end profiling: snapshot, relevance, extraction, relation typing,
//! graph and run manifest.
//!
//! Configuration is a TOML document. Relative paths are resolved against the
//! directory holding the config file.
//!
//! ```toml
//! seed = 7
//! gazetteers = ["gazetteer.tsv"]
//! stopwords = "stopwords.txt"        # optional, one word per line
//! output_dir = "out"                 # optional, default "out"
//!
//! [models]
//! relevance = "models/relevance.json"
//! relations = "models/relations.json"
//!
//! [learners]                         # optional
//! relevance = "bagging"              # short name or a full spec table
//! relations = { kind = "logistic_regression", l2 = 0.001, lr = 0.1, epochs = 200 }
//! folds = 10
//! min_confidence = 0.0
//!
//! [schema]                           # optional
//! min_df = 2
//! max_vocab = 5000
//!
//! [scheme]                           # optional, scholar scheme by default
//! types = ["education", "employment", "publications", "other"]
//! fallback = "other"
//! title_rules = [{ keywords = ["education"], relation = "education" }]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{name_variants, Label, PageDocument, Snapshot};
use crate::digest::sha256_hex;
use crate::extraction::{drop_target_mentions, mentions_to_jsonl, tag_entities, EntityMention, GazetteerTagger, SourceKind};
use crate::features::SchemaConfig;
use crate::graph::{build_graph, export_graph_json, canonical_json, ProfileGraph, TypedMention};
use crate::learners::LearnerSpec;
use crate::relations::{classify_relation, distant_label, CvDocument, LabeledInstance, RelationContext, RelationModels, RelationScheme};
use crate::relevance::{classify_pages, verdicts_to_tsv, RelevanceModel, RelevanceVerdict};
use crate::text::StopWords;

pub const MANIFEST_VERSION: u32 = 1;

/// A learner given by short name (`bagging`) or as a full spec table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LearnerChoice {
    Name(String),
    Spec(LearnerSpec),
}

impl LearnerChoice {
    pub fn resolve(&self) -> Result<LearnerSpec, ConfigError> {
        match self {
            Self::Name(n) => LearnerSpec::from_name(n).ok_or_else(|| ConfigError::Invalid(format!("unknown learner {n:?}"))),
            Self::Spec(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub relevance: LearnerChoice,
    pub relations: LearnerChoice,
    pub folds: usize,
    pub min_confidence: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            relevance: LearnerChoice::Name("bagging".into()),
            relations: LearnerChoice::Name("logistic_regression".into()),
            folds: 10,
            min_confidence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    pub relevance: PathBuf,
    pub relations: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub models: ModelPaths,
    #[serde(default)]
    pub gazetteers: Vec<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub learners: LearnerConfig,
    #[serde(default)]
    pub schema: SchemaConfig,
    #[serde(default)]
    pub scheme: RelationScheme,
    /// Directory relative paths are resolved against; not part of the document.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut config: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.base_dir = base_dir.into();
        config.learners.relevance.resolve()?;
        config.learners.relations.resolve()?;
        if !config.scheme.types.contains(&config.scheme.fallback) {
            return Err(ConfigError::Invalid("scheme fallback must be one of its types".into()));
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Hash of the config as written (paths unresolved), so it is stable
    /// across checkouts.
    pub fn hash(&self) -> String {
        sha256_hex(canonical_json(self).as_bytes())
    }

    pub fn stopword_list(&self) -> Result<StopWords, PipelineFailure> {
        match &self.stopwords {
            None => Ok(StopWords::english()),
            Some(p) => {
                let path = self.resolve(p);
                let text = read_text(&path)?;
                Ok(StopWords::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))))
            }
        }
    }

    pub fn tagger(&self) -> Result<GazetteerTagger, PipelineFailure> {
        let paths: Vec<PathBuf> = self.gazetteers.iter().map(|p| self.resolve(p)).collect();
        GazetteerTagger::load(&paths).map_err(PipelineFailure::from_error)
    }
}

/// Inner error type: a message, later annotated with its stage.
#[derive(Debug)]
pub struct PipelineFailure(String);

impl PipelineFailure {
    fn from_error(e: impl fmt::Display) -> Self {
        Self(e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, PipelineFailure> {
    std::fs::read_to_string(path).map_err(|e| PipelineFailure(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub pages_in: usize,
    pub pages_relevant: usize,
    pub mentions: usize,
    pub instances: usize,
    pub nodes: usize,
    pub edges: usize,
}

/// Everything needed to check that two runs saw the same inputs and produced
/// the same outputs. Wall-clock timings live in a separate file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub target: String,
    pub seed: u64,
    pub config_hash: String,
    pub input_hashes: BTreeMap<String, String>,
    pub stage_hashes: BTreeMap<String, String>,
    pub counts: StageCounts,
    pub completed_stages: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        canonical_json(self)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
    /// The manifest as far as the run got.
    pub manifest: Box<RunManifest>,
}

pub struct ProfileRun {
    pub graph: ProfileGraph,
    pub manifest: RunManifest,
    pub verdicts: Vec<RelevanceVerdict>,
    pub mentions: Vec<TypedMention>,
    /// Milliseconds per stage.
    pub timings: BTreeMap<String, f64>,
}

/// Hash every regular file below `dir` (path and content), in path order.
pub fn directory_hash(dir: &Path) -> std::io::Result<String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.is_file() {
                files.push(path);
            }
        }
    }
    let mut entries: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|p| (p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().replace('\\', "/"), p))
        .collect();
    entries.sort();
    let mut buf = Vec::new();
    for (rel, path) in entries {
        let bytes = std::fs::read(&path)?;
        buf.extend_from_slice(rel.as_bytes());
        buf.push(0);
        buf.extend_from_slice(sha256_hex(&bytes).as_bytes());
        buf.push(b'\n');
    }
    Ok(sha256_hex(&buf))
}

fn file_hash(path: &Path) -> Result<String, PipelineFailure> {
    std::fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| PipelineFailure(format!("{}: {e}", path.display())))
}

/// Tag the given pages of a snapshot, dropping mentions of the target.
pub fn harvest_mentions<'a>(
    snapshot: &Snapshot,
    page_ids: impl IntoIterator<Item = &'a str>,
    tagger: &GazetteerTagger,
) -> Vec<EntityMention> {
    let wanted: BTreeSet<&str> = page_ids.into_iter().collect();
    let variants = name_variants(&snapshot.target);
    let mut out = Vec::new();
    for page in snapshot.pages.iter().filter(|p| wanted.contains(p.page_id.as_str())) {
        let source = if snapshot.homepage_ids.contains(&page.page_id) { SourceKind::Homepage } else { SourceKind::OtherRelevant };
        let doc = PageDocument::from_record(page);
        out.extend(drop_target_mentions(tag_entities(&doc, &page.page_id, source, tagger), &variants));
    }
    out
}

/// Distant-supervision instances for a snapshot with a `cv.json`: mentions on
/// its manually relevant pages (every page when none is labeled), labeled
/// from the CV sections.
pub fn distant_instances(snapshot: &Snapshot, tagger: &GazetteerTagger, scheme: &RelationScheme) -> Result<Vec<LabeledInstance>, PipelineFailure> {
    let Some(cv_path) = snapshot.cv_path() else {
        return Err(PipelineFailure(format!("{} has no cv.json", snapshot.dir.display())));
    };
    let cv = CvDocument::load(cv_path).map_err(PipelineFailure::from_error)?;
    let labeled = snapshot.labeled_pages().next().is_some();
    let pages = snapshot
        .pages
        .iter()
        .filter(|p| !labeled || p.label == Some(Label::Relevant))
        .map(|p| p.page_id.as_str());
    let mentions = harvest_mentions(snapshot, pages, tagger);
    Ok(distant_label(&cv, &mentions, scheme)
        .into_iter()
        .map(|(m, ty)| LabeledInstance::from_labeled_mention(m, ty))
        .collect())
}

struct Stages {
    manifest: RunManifest,
    timings: BTreeMap<String, f64>,
}

impl Stages {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut RunManifest) -> Result<T, PipelineFailure>) -> Result<T, PipelineError> {
        let start = Instant::now();
        let out = f(&mut self.manifest).map_err(|e| PipelineError {
            stage,
            message: e.0,
            manifest: Box::new(self.manifest.clone()),
        })?;
        self.timings.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1000.0);
        self.manifest.completed_stages.push(stage.to_string());
        Ok(out)
    }
}

/// Run every stage on one snapshot directory. Models come from the paths in
/// `config`; nothing is trained here.
pub fn run_profile(config: &PipelineConfig, snapshot_dir: &Path) -> Result<ProfileRun, PipelineError> {
    let mut st = Stages {
        manifest: RunManifest {
            format_version: MANIFEST_VERSION,
            seed: config.seed,
            config_hash: config.hash(),
            ..RunManifest::default()
        },
        timings: BTreeMap::new(),
    };

    let snapshot = st.run("load", |m| {
        let snapshot = Snapshot::load(snapshot_dir).map_err(PipelineFailure::from_error)?;
        m.target = snapshot.target.canonical_name.clone();
        m.counts.pages_in = snapshot.pages.len();
        let corpus = directory_hash(snapshot_dir).map_err(PipelineFailure::from_error)?;
        m.input_hashes.insert("corpus".into(), corpus);
        Ok(snapshot)
    })?;

    let verdicts = st.run("relevance", |m| {
        let path = config.resolve(&config.models.relevance);
        m.input_hashes.insert("model:relevance".into(), file_hash(&path)?);
        let model = RelevanceModel::from_json(&read_text(&path)?).map_err(PipelineFailure::from_error)?;
        let verdicts = classify_pages(&model, &snapshot).map_err(PipelineFailure::from_error)?;
        m.counts.pages_relevant = verdicts.iter().filter(|v| v.label == Label::Relevant).count();
        m.stage_hashes.insert("relevance".into(), sha256_hex(verdicts_to_tsv(&verdicts).as_bytes()));
        Ok(verdicts)
    })?;

    let mentions = st.run("extraction", |m| {
        for g in &config.gazetteers {
            let path = config.resolve(g);
            m.input_hashes.insert(format!("gazetteer:{}", g.display()), file_hash(&path)?);
        }
        let tagger = config.tagger()?;
        let relevant = verdicts.iter().filter(|v| v.label == Label::Relevant).map(|v| v.page_id.as_str());
        let mentions = harvest_mentions(&snapshot, relevant, &tagger);
        m.counts.mentions = mentions.len();
        m.stage_hashes.insert("extraction".into(), sha256_hex(mentions_to_jsonl(&mentions).as_bytes()));
        Ok(mentions)
    })?;

    let typed = st.run("relations", |m| {
        let path = config.resolve(&config.models.relations);
        m.input_hashes.insert("model:relations".into(), file_hash(&path)?);
        let models = RelationModels::from_json(&read_text(&path)?).map_err(PipelineFailure::from_error)?;
        let mut typed = Vec::with_capacity(mentions.len());
        for mention in &mentions {
            let inst = classify_relation(&models, &mention.entity, &RelationContext::from_mention(mention))
                .map_err(PipelineFailure::from_error)?;
            typed.push(TypedMention { mention: mention.clone(), types: inst.assigned_types });
        }
        m.counts.instances = typed.len();
        let lines: Vec<String> = typed
            .iter()
            .map(|t| format!("{}\t{:?}\t{:?}", t.mention.page_id, t.mention.span, t.types))
            .collect();
        m.stage_hashes.insert("relations".into(), sha256_hex(lines.join("\n").as_bytes()));
        Ok(typed)
    })?;

    let graph = st.run("graph", |m| {
        if let Some(p) = &config.stopwords {
            m.input_hashes.insert("stopwords".into(), file_hash(&config.resolve(p))?);
        }
        let stopwords = config.stopword_list()?;
        let graph = build_graph(&snapshot.target.canonical_name, &typed, Some(&config.scheme.fallback), &stopwords)
            .map_err(PipelineFailure::from_error)?;
        m.counts.nodes = graph.nodes.len();
        m.counts.edges = graph.edges.len();
        m.stage_hashes.insert("graph".into(), sha256_hex(export_graph_json(&graph).as_bytes()));
        Ok(graph)
    })?;

    Ok(ProfileRun { graph, manifest: st.manifest, verdicts, mentions: typed, timings: st.timings })
}

/// Lowercase alphanumeric words joined with `-`.
pub fn slug(name: &str) -> String {
    crate::text::tokenize(name).join("-")
}

/// Write `<slug>.graph.json`, `<slug>.manifest.json` and `<slug>.timings.json`
/// into `dir`; returns the graph and manifest paths.
pub fn write_outputs(run: &ProfileRun, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let stem = slug(&run.graph.target.name);
    let graph_path = dir.join(format!("{stem}.graph.json"));
    let manifest_path = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&graph_path, export_graph_json(&run.graph))?;
    std::fs::write(&manifest_path, run.manifest.to_json())?;
    std::fs::write(dir.join(format!("{stem}.timings.json")), canonical_json(&run.timings))?;
    Ok((graph_path, manifest_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "seed = 3\n[models]\nrelevance = \"r.json\"\nrelations = \"m.json\"\n";

    #[test]
    fn minimal_config_defaults() {
        let c = PipelineConfig::parse(MINIMAL, "/cfg").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.learners.relevance.resolve().unwrap(), LearnerSpec::bagging());
        assert_eq!(c.schema, SchemaConfig::default());
        assert_eq!(c.scheme, RelationScheme::scholar());
        assert_eq!(c.resolve(&c.models.relevance), PathBuf::from("/cfg/r.json"));
        assert_eq!(c.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn hash_ignores_base_dir() {
        let a = PipelineConfig::parse(MINIMAL, "/a").unwrap();
        let b = PipelineConfig::parse(MINIMAL, "/b").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = PipelineConfig::parse(&MINIMAL.replace("3", "4"), "/a").unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn learner_tables_and_errors() {
        let text = format!("{MINIMAL}[learners]\nrelations = {{ kind = \"k_nearest\", k = 3 }}\n");
        let c = PipelineConfig::parse(&text, "").unwrap();
        assert_eq!(c.learners.relations.resolve().unwrap(), LearnerSpec::KNearest { k: 3 });
        let bad = format!("{MINIMAL}[learners]\nrelevance = \"perceptron\"\n");
        assert!(matches!(PipelineConfig::parse(&bad, ""), Err(ConfigError::Invalid(_))));
        assert!(matches!(PipelineConfig::parse("seed = 1\n", ""), Err(ConfigError::Parse(_))));
        let unknown = format!("{MINIMAL}colour = \"red\"\n");
        assert!(matches!(PipelineConfig::parse(&unknown, ""), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Jane  O'Doe"), "jane-o-doe");
    }
}
