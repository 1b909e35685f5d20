//! Related-entity harvesting from relevant pages and the homepage/Wikipedia
//! novelty analysis.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{NameVariantSet, PageDocument};
use crate::text::{parse_year, tokenize_cased, CasedToken, StopWords};

pub const CONTEXT_WINDOW: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum ExtractionError {
    #[error("gazetteer not found: {0}")]
    MissingGazetteer(String),
    #[error("gazetteer {path} line {line}: {message}")]
    MalformedGazetteer { path: String, line: usize, message: String },
    #[error("entity surface form is empty")]
    EmptySurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Person,
    Organization,
    Location,
    Unclassified,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [Self::Person, Self::Organization, Self::Location, Self::Unclassified];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Person => "person",
            Self::Organization => "organization",
            Self::Location => "location",
            Self::Unclassified => "unclassified",
        }
    }

    /// Accepts the lowercase name or the common short forms (`per`, `org`, `loc`).
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "person" | "per" => Some(Self::Person),
            "organization" | "organisation" | "org" => Some(Self::Organization),
            "location" | "loc" => Some(Self::Location),
            "unclassified" | "misc" => Some(Self::Unclassified),
            _ => None,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Homepage,
    OtherRelevant,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Homepage => "homepage",
            Self::OtherRelevant => "other_relevant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "homepage" => Some(Self::Homepage),
            "other_relevant" => Some(Self::OtherRelevant),
            _ => None,
        }
    }
}

/// A related entity as written on the page.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub surface_form: Vec<String>,
    pub entity_type: EntityType,
}

impl EntityRef {
    pub fn new(surface_form: Vec<String>, entity_type: EntityType) -> Result<Self, ExtractionError> {
        if surface_form.is_empty() {
            return Err(ExtractionError::EmptySurface);
        }
        Ok(Self { surface_form, entity_type })
    }

    pub fn name(&self) -> String {
        self.surface_form.join(" ")
    }

    /// Case-insensitive surface used for entity identity.
    pub fn key(&self) -> String {
        self.name().to_lowercase()
    }

    pub fn lower_tokens(&self) -> Vec<String> {
        self.surface_form.iter().map(|t| t.to_lowercase()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity: EntityRef,
    pub page_id: String,
    /// Half-open body token range.
    pub span: (usize, usize),
    pub context_before: Vec<String>,
    pub context_after: Vec<String>,
    pub source_kind: SourceKind,
    pub years: BTreeSet<i32>,
}

/// A typed token range proposed by a tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaggedSpan {
    pub start: usize,
    pub end: usize,
    pub entity_type: EntityType,
}

pub trait EntityTagger {
    /// Typed spans over `tokens`. Empty or out-of-range spans are ignored by callers.
    fn tag(&self, tokens: &[CasedToken]) -> Vec<TaggedSpan>;
    /// Type of a standalone surface (an anchor text), or `None` to abstain.
    fn classify(&self, surface: &[CasedToken]) -> Option<EntityType>;
}

const ORG_KEYWORDS: &[&str] = &["university", "institute", "corp", "inc", "ltd", "company"];
const CONNECTORS: &[&str] = &["of", "for", "de", "and", "the"];
const HONORIFICS: &[&str] = &["prof", "professor", "dr", "mr", "mrs", "ms", "sir"];

/// Gazetteer lookup plus capitalization patterns.
///
/// Capitalized runs (joined by `of`, `for`, `de`, `and`, `the`, leading
/// stopwords and honorifics trimmed) are typed in this order: an exact
/// gazetteer entry; Organization when the run contains an organization
/// keyword; otherwise gazetteer entries inside the run, then Person for
/// remaining capitalized stretches of 2 to 4 tokens. Gazetteer entries also
/// match outside runs, case-insensitively.
#[derive(Debug, Clone)]
pub struct GazetteerTagger {
    entries: HashMap<Vec<String>, EntityType>,
    max_len: usize,
    stopwords: StopWords,
}

impl GazetteerTagger {
    pub fn new<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (Vec<String>, EntityType)>,
    {
        let mut tagger = Self { entries: HashMap::new(), max_len: 0, stopwords: StopWords::english() };
        for (surface, ty) in entries {
            tagger.insert(surface, ty);
        }
        tagger
    }

    fn insert(&mut self, surface: Vec<String>, ty: EntityType) {
        let key: Vec<String> = surface.iter().map(|t| t.to_lowercase()).collect();
        if key.is_empty() {
            return;
        }
        self.max_len = self.max_len.max(key.len());
        self.entries.insert(key, ty);
    }

    /// `surface <TAB> type` lines; blank lines and `#` comments are skipped.
    pub fn parse_tsv(text: &str, origin: &str) -> Result<Self, ExtractionError> {
        let mut tagger = Self::new([]);
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |message: &str| ExtractionError::MalformedGazetteer {
                path: origin.to_string(),
                line: n + 1,
                message: message.to_string(),
            };
            let (surface, ty) = line.split_once('\t').ok_or_else(|| malformed("expected surface<TAB>type"))?;
            let ty = EntityType::parse(ty).ok_or_else(|| malformed("unknown entity type"))?;
            let tokens: Vec<String> = tokenize_cased(surface).into_iter().map(|t| t.lower).collect();
            if tokens.is_empty() {
                return Err(malformed("empty surface"));
            }
            tagger.insert(tokens, ty);
        }
        Ok(tagger)
    }

    /// Load and merge gazetteer files; later files override earlier entries.
    pub fn load<P: AsRef<Path>>(paths: &[P]) -> Result<Self, ExtractionError> {
        let mut tagger = Self::new([]);
        for path in paths {
            let path = path.as_ref();
            let text = std::fs::read_to_string(path)
                .map_err(|_| ExtractionError::MissingGazetteer(path.display().to_string()))?;
            let part = Self::parse_tsv(&text, &path.display().to_string())?;
            for (k, v) in part.entries {
                tagger.insert(k, v);
            }
        }
        Ok(tagger)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, lower: &[String]) -> Option<EntityType> {
        self.entries.get(lower).copied()
    }

    fn longest_entry_at(&self, tokens: &[CasedToken], start: usize, end: usize) -> Option<(usize, EntityType)> {
        let max = self.max_len.min(end - start);
        (1..=max).rev().find_map(|len| {
            let key: Vec<String> = tokens[start..start + len].iter().map(|t| t.lower.clone()).collect();
            self.lookup(&key).map(|ty| (len, ty))
        })
    }

    fn gazetteer_spans(&self, tokens: &[CasedToken], start: usize, end: usize) -> Vec<TaggedSpan> {
        let mut out = Vec::new();
        let mut i = start;
        while i < end {
            // Entries never start mid-sentence-boundary: a match may not cross one.
            match self.longest_entry_at(tokens, i, end) {
                Some((len, ty)) if !tokens[i + 1..i + len].iter().any(|t| t.sentence_start) => {
                    out.push(TaggedSpan { start: i, end: i + len, entity_type: ty });
                    i += len;
                }
                _ => i += 1,
            }
        }
        out
    }

    /// Maximal capitalized runs, trimmed.
    fn capitalized_runs(&self, tokens: &[CasedToken]) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if !tokens[i].is_capitalized() {
                i += 1;
                continue;
            }
            let start = i;
            let mut end = i + 1;
            loop {
                if end < tokens.len() && !tokens[end].sentence_start && tokens[end].is_capitalized() {
                    end += 1;
                    continue;
                }
                // A connector joins two capitalized stretches.
                let joins = end + 1 < tokens.len()
                    && CONNECTORS.contains(&tokens[end].text.as_str())
                    && !tokens[end].sentence_start
                    && !tokens[end + 1].sentence_start
                    && tokens[end + 1].is_capitalized();
                if joins {
                    end += 2;
                } else {
                    break;
                }
            }
            i = end;
            let mut s = start;
            while s < end && (self.stopwords.contains(&tokens[s].lower) || HONORIFICS.contains(&tokens[s].lower.as_str())) {
                s += 1;
            }
            if s < end {
                runs.push((s, end));
            }
        }
        runs
    }

    fn tag_run(&self, tokens: &[CasedToken], start: usize, end: usize, out: &mut Vec<TaggedSpan>) {
        let whole: Vec<String> = tokens[start..end].iter().map(|t| t.lower.clone()).collect();
        if let Some(ty) = self.lookup(&whole) {
            out.push(TaggedSpan { start, end, entity_type: ty });
            return;
        }
        if whole.iter().any(|t| ORG_KEYWORDS.contains(&t.as_str())) {
            out.push(TaggedSpan { start, end, entity_type: EntityType::Organization });
            return;
        }
        let gaz = self.gazetteer_spans(tokens, start, end);
        let mut covered = vec![false; end - start];
        for g in &gaz {
            covered[g.start - start..g.end - start].fill(true);
        }
        out.extend(gaz);
        // Person candidates: capitalized stretches without connectors or gazetteer hits.
        let mut i = start;
        while i < end {
            let free = |j: usize| !covered[j - start] && tokens[j].is_capitalized();
            if !free(i) {
                i += 1;
                continue;
            }
            let s = i;
            while i < end && free(i) {
                i += 1;
            }
            if (2..=4).contains(&(i - s)) {
                out.push(TaggedSpan { start: s, end: i, entity_type: EntityType::Person });
            }
        }
    }
}

impl EntityTagger for GazetteerTagger {
    fn tag(&self, tokens: &[CasedToken]) -> Vec<TaggedSpan> {
        let mut spans = Vec::new();
        let mut in_run = vec![false; tokens.len()];
        for (s, e) in self.capitalized_runs(tokens) {
            in_run[s..e].fill(true);
            self.tag_run(tokens, s, e, &mut spans);
        }
        // Gazetteer hits in lowercase text, outside every run.
        let mut i = 0;
        while i < tokens.len() {
            if in_run[i] {
                i += 1;
                continue;
            }
            let mut end = i;
            while end < tokens.len() && !in_run[end] {
                end += 1;
            }
            spans.extend(self.gazetteer_spans(tokens, i, end));
            i = end;
        }
        spans.sort_by_key(|s| (s.start, s.end));
        spans
    }

    fn classify(&self, surface: &[CasedToken]) -> Option<EntityType> {
        let lower: Vec<String> = surface.iter().map(|t| t.lower.clone()).collect();
        if let Some(ty) = self.lookup(&lower) {
            return Some(ty);
        }
        if lower.iter().any(|t| ORG_KEYWORDS.contains(&t.as_str())) && surface.first()?.is_capitalized() {
            return Some(EntityType::Organization);
        }
        let person = (2..=4).contains(&surface.len()) && surface.iter().all(CasedToken::is_capitalized);
        person.then_some(EntityType::Person)
    }
}

/// Anchor texts worth treating as entity mentions: capitalized, at most six
/// tokens, and either typed by the tagger or at least two tokens long.
fn anchor_is_entity_like(tokens: &[CasedToken], typed: bool) -> bool {
    if tokens.is_empty() || tokens.len() > 6 || !tokens[0].is_capitalized() {
        return false;
    }
    let content_capitalized = tokens
        .iter()
        .all(|t| t.is_capitalized() || CONNECTORS.contains(&t.text.as_str()));
    content_capitalized && (typed || tokens.len() >= 2)
}

fn find_subsequence(haystack: &[CasedToken], needle: &[CasedToken], from: usize) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    (from..=haystack.len() - needle.len())
        .find(|&i| haystack[i..i + needle.len()].iter().zip(needle).all(|(a, b)| a.lower == b.lower))
}

/// Up to [`CONTEXT_WINDOW`] tokens on each side of `[start, end)`, stopping at
/// sentence boundaries.
pub fn context_window(tokens: &[CasedToken], start: usize, end: usize) -> (Vec<String>, Vec<String>) {
    let mut before = Vec::new();
    let mut i = start;
    while i > 0 && before.len() < CONTEXT_WINDOW && !tokens[i].sentence_start {
        i -= 1;
        before.push(tokens[i].lower.clone());
    }
    before.reverse();
    let mut after = Vec::new();
    let mut j = end;
    while j < tokens.len() && after.len() < CONTEXT_WINDOW && !tokens[j].sentence_start {
        after.push(tokens[j].lower.clone());
        j += 1;
    }
    (before, after)
}

fn make_mention(
    tokens: &[CasedToken],
    span: TaggedSpan,
    page_id: &str,
    source_kind: SourceKind,
) -> EntityMention {
    let (context_before, context_after) = context_window(tokens, span.start, span.end);
    let years = context_before.iter().chain(&context_after).filter_map(|t| parse_year(t)).collect();
    EntityMention {
        entity: EntityRef {
            surface_form: tokens[span.start..span.end].iter().map(|t| t.text.clone()).collect(),
            entity_type: span.entity_type,
        },
        page_id: page_id.to_string(),
        span: (span.start, span.end),
        context_before,
        context_after,
        source_kind,
        years,
    }
}

/// Mentions from anchor texts (located in the body, typed by the tagger or
/// Unclassified) and from the tagger over the body, one per span, ordered by
/// span. When an anchor and a tagger span coincide the typed one is kept;
/// tagger spans that partly overlap an anchor are dropped.
pub fn tag_entities(
    doc: &PageDocument,
    page_id: &str,
    source_kind: SourceKind,
    tagger: &dyn EntityTagger,
) -> Vec<EntityMention> {
    let tokens = &doc.body_cased;
    let mut by_span: BTreeMap<(usize, usize), TaggedSpan> = BTreeMap::new();
    let mut cursor: HashMap<Vec<String>, usize> = HashMap::new();
    for anchor in &doc.anchor_texts {
        let cased = tokenize_cased(&anchor.text);
        let ty = tagger.classify(&cased);
        if !anchor_is_entity_like(&cased, ty.is_some()) {
            continue;
        }
        // Repeated anchors with the same text claim successive body occurrences.
        let key: Vec<String> = cased.iter().map(|t| t.lower.clone()).collect();
        let from = cursor.get(&key).copied().unwrap_or(0);
        if let Some(start) = find_subsequence(tokens, &cased, from) {
            cursor.insert(key, start + 1);
            let span = TaggedSpan { start, end: start + cased.len(), entity_type: ty.unwrap_or(EntityType::Unclassified) };
            by_span.entry((span.start, span.end)).or_insert(span);
        }
    }
    let anchors: Vec<(usize, usize)> = by_span.keys().copied().collect();
    for span in tagger.tag(tokens) {
        if span.start >= span.end || span.end > tokens.len() {
            continue;
        }
        let overlaps_anchor = anchors
            .iter()
            .any(|&(s, e)| (s, e) != (span.start, span.end) && s < span.end && span.start < e);
        if overlaps_anchor {
            continue;
        }
        by_span
            .entry((span.start, span.end))
            .and_modify(|s| {
                if s.entity_type == EntityType::Unclassified {
                    s.entity_type = span.entity_type;
                }
            })
            .or_insert(span);
    }
    by_span.into_values().map(|s| make_mention(tokens, s, page_id, source_kind)).collect()
}

/// Drop mentions of the target itself (any of its name variants).
pub fn drop_target_mentions(mentions: Vec<EntityMention>, variants: &NameVariantSet) -> Vec<EntityMention> {
    mentions
        .into_iter()
        .filter(|m| !variants.contains(&m.entity.lower_tokens()))
        .collect()
}

/// One JSON object per line.
pub fn mentions_to_jsonl(mentions: &[EntityMention]) -> String {
    let mut out = String::new();
    for m in mentions {
        out.push_str(&serde_json::to_string(m).expect("mention serializes"));
        out.push('\n');
    }
    out
}

pub fn mentions_from_jsonl(text: &str) -> Result<Vec<EntityMention>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoveltyCounts {
    pub total_entities: usize,
    pub not_on_homepage: usize,
    pub not_on_homepage_but_on_wikipedia: usize,
    /// Each count divided by the overall #E.
    pub ratio_total: f64,
    pub ratio_not_on_homepage: f64,
    pub ratio_not_on_homepage_but_on_wikipedia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    pub overall: NoveltyCounts,
    pub per_type: BTreeMap<EntityType, NoveltyCounts>,
}

/// Count distinct related entities (case-insensitive surface) and how many
/// never appear on a homepage page, and of those how many appear on a
/// Wikipedia page. An entity's type is its most frequent mention type.
pub fn novelty_analysis(
    mentions: &[EntityMention],
    homepage_ids: &BTreeSet<String>,
    wikipedia_ids: &BTreeSet<String>,
) -> NoveltyReport {
    #[derive(Default)]
    struct Seen {
        types: BTreeMap<EntityType, usize>,
        homepage: bool,
        wikipedia: bool,
    }
    let mut entities: BTreeMap<String, Seen> = BTreeMap::new();
    for m in mentions {
        let seen = entities.entry(m.entity.key()).or_default();
        *seen.types.entry(m.entity.entity_type).or_default() += 1;
        seen.homepage |= homepage_ids.contains(&m.page_id);
        seen.wikipedia |= wikipedia_ids.contains(&m.page_id);
    }
    let mut raw: BTreeMap<Option<EntityType>, [usize; 3]> = BTreeMap::new();
    for seen in entities.values() {
        let ty = seen
            .types
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(t, _)| *t)
            .expect("entity has a mention");
        for key in [None, Some(ty)] {
            let c = raw.entry(key).or_default();
            c[0] += 1;
            if !seen.homepage {
                c[1] += 1;
                if seen.wikipedia {
                    c[2] += 1;
                }
            }
        }
    }
    let total = entities.len();
    let ratio = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let counts = |c: [usize; 3]| NoveltyCounts {
        total_entities: c[0],
        not_on_homepage: c[1],
        not_on_homepage_but_on_wikipedia: c[2],
        ratio_total: ratio(c[0]),
        ratio_not_on_homepage: ratio(c[1]),
        ratio_not_on_homepage_but_on_wikipedia: ratio(c[2]),
    };
    NoveltyReport {
        overall: counts(raw.get(&None).copied().unwrap_or_default()),
        per_type: raw.into_iter().filter_map(|(k, c)| Some((k?, counts(c)))).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_html;
    use crate::rng::SplitMix64;

    fn gazetteer() -> GazetteerTagger {
        GazetteerTagger::parse_tsv(
            "# test\nUniversity of Zurich\torganization\nOxford\tlocation\nZurich\tlocation\n",
            "test",
        )
        .unwrap()
    }

    fn doc(body: &str) -> PageDocument {
        parse_html(format!("<html><body>{body}</body></html>").as_bytes())
    }

    fn names(ms: &[EntityMention]) -> Vec<(String, EntityType)> {
        ms.iter().map(|m| (m.entity.name(), m.entity.entity_type)).collect()
    }

    #[test]
    fn gazetteer_org_with_year() {
        let d = doc("<p>He studied at University of Zurich in 1998 and left.</p>");
        let ms = tag_entities(&d, "p1", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(names(&ms), vec![("University of Zurich".to_string(), EntityType::Organization)]);
        assert_eq!(ms[0].years, BTreeSet::from([1998]));
        assert_eq!(ms[0].context_before, vec!["he", "studied", "at"]);
        assert_eq!(ms[0].context_after, vec!["in", "1998", "and", "left"]);
    }

    #[test]
    fn anchor_person() {
        let d = doc(r#"<p>Joint work with <a href="/rp">Roger Penrose</a> on singularities.</p>"#);
        let ms = tag_entities(&d, "p1", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(names(&ms), vec![("Roger Penrose".to_string(), EntityType::Person)]);
    }

    #[test]
    fn unknown_anchor_is_unclassified() {
        let tagger = GazetteerTagger::new([]);
        let d = doc(r#"<p>see <a href="/x">Baby Universes and Other Essays</a> now</p>"#);
        let ms = tag_entities(&d, "p", SourceKind::Homepage, &tagger);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].entity.entity_type, EntityType::Unclassified);
        assert_eq!(ms[0].source_kind, SourceKind::Homepage);
    }

    #[test]
    fn empty_document() {
        assert!(tag_entities(&PageDocument::default(), "p", SourceKind::OtherRelevant, &gazetteer()).is_empty());
    }

    #[test]
    fn org_keyword_rule() {
        let d = doc("<p>She joined the University of Haifa last year.</p>");
        let ms = tag_entities(&d, "p", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(names(&ms), vec![("University of Haifa".to_string(), EntityType::Organization)]);
    }

    #[test]
    fn lowercase_names_are_not_persons() {
        let d = doc("<p>a talk by stephen hawking today</p>");
        assert!(tag_entities(&d, "p", SourceKind::OtherRelevant, &gazetteer()).is_empty());
    }

    #[test]
    fn gazetteer_beats_person_pattern() {
        let g = GazetteerTagger::parse_tsv("Oxford Street\tlocation\n", "g").unwrap();
        let d = doc("<p>they met on Oxford Street yesterday</p>");
        let ms = tag_entities(&d, "p", SourceKind::OtherRelevant, &g);
        assert_eq!(names(&ms), vec![("Oxford Street".to_string(), EntityType::Location)]);
        let plain = tag_entities(&d, "p", SourceKind::OtherRelevant, &GazetteerTagger::new([]));
        assert_eq!(plain[0].entity.entity_type, EntityType::Person);
        let single = doc("<p>a visit to Oxford soon</p>");
        assert_eq!(names(&tag_entities(&single, "p", SourceKind::OtherRelevant, &gazetteer())), vec![("Oxford".to_string(), EntityType::Location)]);
    }

    #[test]
    fn leading_stopwords_and_honorifics_trimmed() {
        let d = doc("<p>The talk. Professor Kip Thorne spoke.</p>");
        let ms = tag_entities(&d, "p", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(names(&ms), vec![("Kip Thorne".to_string(), EntityType::Person)]);
    }

    #[test]
    fn context_stops_at_sentence_boundary() {
        let d = doc("<p>Prizes were many. Kip Thorne won. Then more came</p>");
        let ms = tag_entities(&d, "p", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(ms.len(), 1);
        assert!(ms[0].context_before.is_empty());
        assert_eq!(ms[0].context_after, vec!["won"]);
    }

    #[test]
    fn missing_and_malformed_gazetteer() {
        assert!(matches!(
            GazetteerTagger::load(&["/nonexistent/gazetteer.tsv"]),
            Err(ExtractionError::MissingGazetteer(_))
        ));
        assert!(matches!(
            GazetteerTagger::parse_tsv("Oxford\tplanet\n", "g"),
            Err(ExtractionError::MalformedGazetteer { line: 1, .. })
        ));
    }

    /// Proposes random, possibly invalid, spans.
    struct RandomTagger(std::cell::RefCell<SplitMix64>);

    impl EntityTagger for RandomTagger {
        fn tag(&self, tokens: &[CasedToken]) -> Vec<TaggedSpan> {
            let mut rng = self.0.borrow_mut();
            let n = tokens.len() + 2;
            (0..rng.below(8))
                .map(|_| {
                    let start = rng.below(n);
                    let end = start + rng.below(5);
                    TaggedSpan { start, end, entity_type: EntityType::ALL[rng.below(4)] }
                })
                .collect()
        }

        fn classify(&self, _: &[CasedToken]) -> Option<EntityType> {
            let mut rng = self.0.borrow_mut();
            (rng.below(2) == 0).then_some(EntityType::Location)
        }
    }

    #[test]
    fn mention_invariants_hold_for_any_tagger() {
        let words = ["Ada", "met", "Alan", "Turing", "in", "1936", ".", "Then", "she", "left", "!", "2001", "Bletchley", "Park"];
        let mut rng = SplitMix64::new(17);
        for round in 0..300 {
            let body: Vec<&str> = (0..rng.below(30)).map(|_| words[rng.below(words.len())]).collect();
            let link = words[rng.below(words.len())];
            let d = doc(&format!("<p>{} <a href='#'>{link} Turing</a></p>", body.join(" ")));
            let tagger = RandomTagger(std::cell::RefCell::new(SplitMix64::new(round)));
            let ms = tag_entities(&d, "p", SourceKind::OtherRelevant, &tagger);
            let mut spans = BTreeSet::new();
            for m in &ms {
                let (s, e) = m.span;
                assert!(s < e && e <= d.body_tokens.len());
                assert!(spans.insert(m.span), "duplicate span");
                assert!(m.context_before.len() <= CONTEXT_WINDOW && m.context_after.len() <= CONTEXT_WINDOW);
                assert_eq!(m.context_before, d.body_tokens[s - m.context_before.len()..s]);
                assert_eq!(m.context_after, d.body_tokens[e..e + m.context_after.len()]);
                assert!(m.years.iter().all(|y| (1900..=2099).contains(y)));
            }
        }
    }

    fn mention(name: &str, ty: EntityType, page: &str) -> EntityMention {
        EntityMention {
            entity: EntityRef::new(name.split(' ').map(String::from).collect(), ty).unwrap(),
            page_id: page.to_string(),
            span: (0, 1),
            context_before: vec![],
            context_after: vec![],
            source_kind: if page == "home" { SourceKind::Homepage } else { SourceKind::OtherRelevant },
            years: BTreeSet::new(),
        }
    }

    #[test]
    fn novelty_definitions() {
        let home = BTreeSet::from(["home".to_string()]);
        let wiki = BTreeSet::from(["wiki".to_string()]);
        let ms = vec![
            mention("Only Home", EntityType::Person, "home"),
            mention("Only Article", EntityType::Person, "a1"),
            mention("Article Wiki", EntityType::Organization, "a1"),
            mention("article wiki", EntityType::Organization, "wiki"),
            mention("Everywhere", EntityType::Location, "home"),
            mention("Everywhere", EntityType::Location, "wiki"),
        ];
        let r = novelty_analysis(&ms, &home, &wiki);
        assert_eq!((r.overall.total_entities, r.overall.not_on_homepage, r.overall.not_on_homepage_but_on_wikipedia), (4, 2, 1));
        let org = r.per_type[&EntityType::Organization];
        assert_eq!((org.total_entities, org.not_on_homepage, org.not_on_homepage_but_on_wikipedia), (1, 1, 1));
        assert_eq!(org.ratio_not_on_homepage, 0.25);
        let empty = novelty_analysis(&[], &home, &wiki);
        assert_eq!(empty.overall.total_entities, 0);
        assert_eq!(empty.overall.ratio_not_on_homepage, 0.0);
    }

    #[test]
    fn majority_type_decides() {
        let ms = vec![
            mention("Oxford", EntityType::Location, "a"),
            mention("Oxford", EntityType::Location, "b"),
            mention("oxford", EntityType::Organization, "c"),
        ];
        let r = novelty_analysis(&ms, &BTreeSet::new(), &BTreeSet::new());
        assert_eq!(r.per_type.keys().copied().collect::<Vec<_>>(), vec![EntityType::Location]);
    }

    #[test]
    fn jsonl_roundtrip() {
        let d = doc("<p>He studied at University of Zurich in 1998. Kip Thorne agreed.</p>");
        let ms = tag_entities(&d, "p1", SourceKind::OtherRelevant, &gazetteer());
        assert_eq!(mentions_from_jsonl(&mentions_to_jsonl(&ms)).unwrap(), ms);
    }
}
