//! Tokenization shared by every text-consuming stage.

use std::collections::BTreeSet;

/// Lowercase, Unicode-aware split on non-alphanumeric boundaries. Digit runs
/// are kept as tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    raw_pieces(text).filter_map(|(piece, _)| normalize(piece)).collect()
}

/// A token with its original casing, used where capitalization matters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CasedToken {
    pub text: String,
    pub lower: String,
    /// True when a hard boundary (`.`, `!`, `?` or a line break) precedes the token.
    pub sentence_start: bool,
}

impl CasedToken {
    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

/// Same split as [`tokenize`], keeping the cased surface and hard boundaries.
/// `tokenize_cased(s)` lowered is always equal to `tokenize(s)`.
pub fn tokenize_cased(text: &str) -> Vec<CasedToken> {
    let mut out = Vec::new();
    let mut boundary = true;
    let mut last_end = 0;
    for (piece, start) in raw_pieces(text) {
        if text[last_end..start].chars().any(is_hard_boundary) {
            boundary = true;
        }
        last_end = start + piece.len();
        if let Some(lower) = normalize(piece) {
            out.push(CasedToken {
                text: piece.to_string(),
                lower,
                sentence_start: boundary,
            });
            boundary = false;
        }
    }
    out
}

pub fn is_hard_boundary(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\n')
}

fn raw_pieces(text: &str) -> impl Iterator<Item = (&str, usize)> {
    let mut pieces = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_alphanumeric() {
            start.get_or_insert(i);
        } else if let Some(s) = start.take() {
            pieces.push((&text[s..i], s));
        }
    }
    if let Some(s) = start {
        pieces.push((&text[s..], s));
    }
    pieces.into_iter()
}

// Lowercasing can introduce combining marks (e.g. U+0130); drop them so the
// result is stable under re-tokenization.
fn normalize(piece: &str) -> Option<String> {
    let lower: String = piece
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect();
    (!lower.is_empty()).then_some(lower)
}

/// Four-digit year in `[1900, 2099]`.
pub fn parse_year(token: &str) -> Option<i32> {
    if token.len() != 4 || !token.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: i32 = token.parse().ok()?;
    (1900..=2099).contains(&year).then_some(year)
}

/// English stopword list used for word clouds and tagger run trimming.
#[derive(Debug, Clone)]
pub struct StopWords {
    words: BTreeSet<String>,
}

impl StopWords {
    pub fn english() -> Self {
        Self::from_words(ENGLISH_STOPWORDS.iter().copied())
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words.into_iter().map(|w| w.as_ref().to_lowercase()).collect(),
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Default for StopWords {
    fn default() -> Self {
        Self::english()
    }
}

pub const ENGLISH_STOPWORDS: &[&str] = &[
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "your", "yours",
    "yourself", "yourselves", "he", "him", "his", "himself", "she", "her", "hers", "herself",
    "it", "its", "itself", "they", "them", "their", "theirs", "themselves", "what", "which",
    "who", "whom", "this", "that", "these", "those", "am", "is", "are", "was", "were", "be",
    "been", "being", "have", "has", "had", "having", "do", "does", "did", "doing", "a", "an",
    "the", "and", "but", "if", "or", "because", "as", "until", "while", "of", "at", "by", "for",
    "with", "about", "against", "between", "into", "through", "during", "before", "after",
    "above", "below", "to", "from", "up", "down", "in", "out", "on", "off", "over", "under",
    "again", "further", "then", "once", "here", "there", "when", "where", "why", "how", "all",
    "any", "both", "each", "few", "more", "most", "other", "some", "such", "no", "nor", "not",
    "only", "own", "same", "so", "than", "too", "very", "s", "t", "can", "will", "just", "don",
    "should", "now", "also", "would", "could", "may", "might", "must", "shall", "us", "upon",
    "via", "per", "among", "within", "without", "across", "along", "around", "behind", "beside",
    "besides", "beyond", "despite", "toward", "towards", "unto", "onto", "since", "yet",
    "though", "although", "whether", "either", "neither", "ever", "every", "another", "anyone",
    "anything", "everyone", "everything", "someone", "something", "nobody", "nothing", "whose",
    "quite", "much", "many",
];
