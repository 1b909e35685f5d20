//! Offline snapshot corpora: loading, HTML parsing and person-name variants.
//!
//! A snapshot is a directory holding the search results captured for one
//! target person:
//!
//! ```text
//! manifest.json   {canonical_name, domain_tag, pages: [{page_id, url, rank, file}]}
//! <file>.html     one per page
//! labels.tsv      optional, `page_id<TAB>relevant|irrelevant`
//! homepage.txt    optional, page ids of the person's homepage pages
//! wikipedia.txt   optional, page ids of Wikipedia snapshot pages
//! cv.json         optional, see `relations::CvDocument`
//! ```

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use ego_tree::NodeRef;
use scraper::{Html, Node, Selector};
use serde::{Deserialize, Serialize};

use crate::text::{tokenize, tokenize_cased, CasedToken};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("missing manifest: {0}")]
    MissingManifest(PathBuf),
    #[error("malformed manifest {path}: {message}")]
    MalformedManifest { path: PathBuf, message: String },
    #[error("duplicate rank {rank} in {path}")]
    DuplicateRank { path: PathBuf, rank: u32 },
    #[error("duplicate page id {page_id:?} in {path}")]
    DuplicatePageId { path: PathBuf, page_id: String },
    #[error("malformed label at {path}:{line}: {message}")]
    MalformedLabel { path: PathBuf, line: usize, message: String },
    #[error("unknown page id {page_id:?} at {path}:{line}")]
    UnknownPage { path: PathBuf, line: usize, page_id: String },
    #[error("invalid target entity name {0:?}")]
    InvalidTarget(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetEntity {
    pub canonical_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

impl TargetEntity {
    pub fn new(canonical_name: impl Into<String>) -> Result<Self, CorpusError> {
        let canonical_name = canonical_name.into();
        if tokenize(&canonical_name).is_empty() {
            return Err(CorpusError::InvalidTarget(canonical_name));
        }
        Ok(Self { canonical_name, domain_tag: None })
    }

    pub fn with_domain(mut self, tag: impl Into<String>) -> Self {
        self.domain_tag = Some(tag.into());
        self
    }

    pub fn name_tokens(&self) -> Vec<String> {
        tokenize(&self.canonical_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Relevant,
    Irrelevant,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Relevant => "relevant",
            Label::Irrelevant => "irrelevant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relevant" => Some(Label::Relevant),
            "irrelevant" => Some(Label::Irrelevant),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRecord {
    pub page_id: String,
    pub url: String,
    pub rank: u32,
    pub raw_html: Vec<u8>,
    pub label: Option<Label>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub tokens: Vec<String>,
    pub href: String,
    /// Anchor text as written, for capitalization-sensitive tagging.
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PageDocument {
    pub title_tokens: Vec<String>,
    pub url_tokens: Vec<String>,
    pub body_tokens: Vec<String>,
    /// Body tokens with original casing and sentence boundaries; aligned
    /// index-for-index with `body_tokens`.
    pub body_cased: Vec<CasedToken>,
    pub anchor_texts: Vec<Anchor>,
    pub image_captions: Vec<Vec<String>>,
    pub body_word_count: usize,
}

impl PageDocument {
    /// Parse a record's HTML and attach its URL tokens.
    pub fn from_record(record: &PageRecord) -> Self {
        let mut doc = parse_html(&record.raw_html);
        doc.url_tokens = tokenize(&record.url);
        doc
    }
}

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "head"];
const BLOCKS: &[&str] = &[
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl", "dt", "figcaption",
    "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main",
    "nav", "ol", "p", "pre", "section", "table", "td", "th", "tr", "ul",
];

/// Best-effort extraction of the text fields used downstream. Never fails;
/// anything unparseable degrades to empty fields.
pub fn parse_html(raw_html: &[u8]) -> PageDocument {
    if raw_html.is_empty() {
        return PageDocument::default();
    }
    let source = String::from_utf8_lossy(raw_html);
    let html = Html::parse_document(&source);

    let title = selector("title");
    let title_tokens = html
        .select(&title)
        .next()
        .map(|t| tokenize(&t.text().collect::<String>()))
        .unwrap_or_default();

    let body = selector("body");
    let body_text = html
        .select(&body)
        .next()
        .map(|b| visible_text(*b))
        .unwrap_or_default();
    let body_cased = tokenize_cased(&body_text);
    let body_tokens: Vec<String> = body_cased.iter().map(|t| t.lower.clone()).collect();

    let anchor_texts = html
        .select(&selector("a[href]"))
        .filter_map(|a| {
            let text = visible_text(*a);
            let tokens = tokenize(&text);
            (!tokens.is_empty()).then(|| Anchor {
                tokens,
                href: a.value().attr("href").unwrap_or_default().to_string(),
                text: text.split_whitespace().collect::<Vec<_>>().join(" "),
            })
        })
        .collect();

    let mut image_captions: Vec<Vec<String>> = html
        .select(&selector("img[alt]"))
        .map(|img| tokenize(img.value().attr("alt").unwrap_or_default()))
        .collect();
    image_captions.extend(
        html.select(&selector("figcaption"))
            .map(|c| tokenize(&c.text().collect::<String>())),
    );
    image_captions.retain(|c| !c.is_empty());

    PageDocument {
        title_tokens,
        url_tokens: Vec::new(),
        body_word_count: body_tokens.len(),
        body_tokens,
        body_cased,
        anchor_texts,
        image_captions,
    }
}

fn selector(css: &str) -> Selector {
    Selector::parse(css).expect("static selector")
}

// Iterative walk so pathological nesting cannot exhaust the stack.
fn visible_text(root: NodeRef<'_, Node>) -> String {
    enum Step<'a> {
        Enter(NodeRef<'a, Node>),
        Break,
    }
    let mut out = String::new();
    let mut stack = vec![Step::Enter(root)];
    while let Some(step) = stack.pop() {
        let node = match step {
            Step::Break => {
                out.push('\n');
                continue;
            }
            Step::Enter(node) => node,
        };
        match node.value() {
            Node::Text(text) => out.push_str(text),
            Node::Element(el) => {
                let name = el.name();
                if SKIPPED.contains(&name) {
                    continue;
                }
                let block = BLOCKS.contains(&name);
                if block {
                    out.push('\n');
                    stack.push(Step::Break);
                } else {
                    out.push(' ');
                }
                let children: Vec<_> = node.children().collect();
                stack.extend(children.into_iter().rev().map(Step::Enter));
            }
            _ => {}
        }
    }
    out
}

/// Token-sequence patterns treated as references to the target person.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameVariantSet {
    full_name: Vec<String>,
    variants: BTreeSet<Vec<String>>,
}

impl NameVariantSet {
    pub fn full_name(&self) -> &[String] {
        &self.full_name
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<String>> {
        self.variants.iter()
    }

    pub fn contains(&self, variant: &[String]) -> bool {
        self.variants.iter().any(|v| v.as_slice() == variant)
    }

    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    /// Length of the longest variant matching `tokens` at `start`.
    pub fn longest_match_at(&self, tokens: &[String], start: usize) -> Option<usize> {
        let rest = &tokens[start..];
        self.variants
            .iter()
            .filter(|v| rest.starts_with(v))
            .map(Vec::len)
            .max()
    }

    /// Non-overlapping leftmost-longest matches as `(start, len)`.
    pub fn find_all(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut found = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            match self.longest_match_at(tokens, i) {
                Some(len) => {
                    found.push((i, len));
                    i += len;
                }
                None => i += 1,
            }
        }
        found
    }

    pub fn occurs_in(&self, tokens: &[String]) -> bool {
        (0..tokens.len()).any(|i| self.longest_match_at(tokens, i).is_some())
    }

    pub fn full_name_occurs_in(&self, tokens: &[String]) -> bool {
        !self.full_name.is_empty() && tokens.windows(self.full_name.len()).any(|w| w == self.full_name)
    }
}

/// Variants of a person name, matched as exact token subsequences:
/// the full name, the surname alone, first name + surname, first initial +
/// surname, and surname + first name.
pub fn name_variants(entity: &TargetEntity) -> NameVariantSet {
    let tokens = entity.name_tokens();
    let mut variants = BTreeSet::new();
    variants.insert(tokens.clone());
    if let [first, .., last] = tokens.as_slice() {
        let initial: String = first.chars().take(1).collect();
        variants.insert(vec![last.clone()]);
        variants.insert(vec![first.clone(), last.clone()]);
        variants.insert(vec![initial, last.clone()]);
        variants.insert(vec![last.clone(), first.clone()]);
    }
    NameVariantSet { full_name: tokens, variants }
}

#[derive(Debug, Deserialize)]
struct Manifest {
    canonical_name: String,
    #[serde(default)]
    domain_tag: Option<String>,
    pages: Vec<ManifestPage>,
}

#[derive(Debug, Deserialize)]
struct ManifestPage {
    page_id: String,
    url: String,
    rank: u32,
    file: String,
}

/// A loaded snapshot directory.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub dir: PathBuf,
    pub target: TargetEntity,
    pub pages: Vec<PageRecord>,
    pub homepage_ids: BTreeSet<String>,
    pub wikipedia_ids: BTreeSet<String>,
}

impl Snapshot {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let dir = dir.as_ref();
        let manifest_path = dir.join("manifest.json");
        if !manifest_path.is_file() {
            return Err(CorpusError::MissingManifest(manifest_path));
        }
        let bytes = fs::read(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: Manifest =
            serde_json::from_slice(&bytes).map_err(|e| CorpusError::MalformedManifest {
                path: manifest_path.clone(),
                message: e.to_string(),
            })?;

        let target = TargetEntity {
            domain_tag: manifest.domain_tag,
            ..TargetEntity::new(manifest.canonical_name)?
        };

        let mut ranks = HashSet::new();
        let mut ids = HashSet::new();
        let mut pages = Vec::with_capacity(manifest.pages.len());
        for page in manifest.pages {
            if page.rank == 0 {
                return Err(CorpusError::MalformedManifest {
                    path: manifest_path.clone(),
                    message: format!("page {:?} has rank 0", page.page_id),
                });
            }
            if !ranks.insert(page.rank) {
                return Err(CorpusError::DuplicateRank { path: manifest_path.clone(), rank: page.rank });
            }
            if !ids.insert(page.page_id.clone()) {
                return Err(CorpusError::DuplicatePageId {
                    path: manifest_path.clone(),
                    page_id: page.page_id,
                });
            }
            let file = dir.join(&page.file);
            let raw_html = fs::read(&file).map_err(io_err(&file))?;
            pages.push(PageRecord {
                page_id: page.page_id,
                url: page.url,
                rank: page.rank,
                raw_html,
                label: None,
            });
        }
        pages.sort_by_key(|p| p.rank);

        let labels_path = dir.join("labels.tsv");
        if labels_path.is_file() {
            let text = fs::read_to_string(&labels_path).map_err(io_err(&labels_path))?;
            for (n, line) in data_lines(&text) {
                let malformed = |message: String| CorpusError::MalformedLabel {
                    path: labels_path.clone(),
                    line: n,
                    message,
                };
                let (id, value) = line
                    .split_once('\t')
                    .ok_or_else(|| malformed("expected page_id<TAB>label".into()))?;
                let label = Label::parse(value).ok_or_else(|| malformed(format!("unknown label {value:?}")))?;
                let page = pages
                    .iter_mut()
                    .find(|p| p.page_id == id.trim())
                    .ok_or_else(|| malformed(format!("unknown page id {:?}", id.trim())))?;
                page.label = Some(label);
            }
        }

        let homepage_ids = read_id_list(&dir.join("homepage.txt"), &ids)?;
        let wikipedia_ids = read_id_list(&dir.join("wikipedia.txt"), &ids)?;

        Ok(Self { dir: dir.to_path_buf(), target, pages, homepage_ids, wikipedia_ids })
    }

    pub fn cv_path(&self) -> Option<PathBuf> {
        let path = self.dir.join("cv.json");
        path.is_file().then_some(path)
    }

    pub fn labeled_pages(&self) -> impl Iterator<Item = (&PageRecord, Label)> {
        self.pages.iter().filter_map(|p| p.label.map(|l| (p, l)))
    }
}

/// Load a snapshot's target and its pages in rank order.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<(TargetEntity, Vec<PageRecord>), CorpusError> {
    let snapshot = Snapshot::load(path)?;
    Ok((snapshot.target, snapshot.pages))
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn read_id_list(path: &Path, known: &HashSet<String>) -> Result<BTreeSet<String>, CorpusError> {
    if !path.is_file() {
        return Ok(BTreeSet::new());
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut ids = BTreeSet::new();
    for (line, id) in data_lines(&text) {
        let id = id.trim();
        if !known.contains(id) {
            return Err(CorpusError::UnknownPage { path: path.to_path_buf(), line, page_id: id.to_string() });
        }
        ids.insert(id.to_string());
    }
    Ok(ids)
}
