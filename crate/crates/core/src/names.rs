//! Repair and canonicalization of raw scientific names before they are sent
//! to the backbone.
//!
//! The convention enforced here is the one both nomenclature codes share: a
//! capitalized genus followed by fully lowercase epithets. Hybrid names are
//! rewritten to a single form with the `×` marker attached to the epithet
//! it precedes (`Triticum ×secale`).

use std::fmt;

use crate::rank::Rank;

pub const HYBRID_MARKER: char = '×';

/// A name as supplied by the user, with an optional rank annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNameEntry {
    pub raw_text: String,
    pub rank_hint: Option<Rank>,
}

impl RawNameEntry {
    pub fn new(raw_text: impl Into<String>) -> Self {
        RawNameEntry { raw_text: raw_text.into(), rank_hint: None }
    }

    pub fn with_rank(raw_text: impl Into<String>, rank: Rank) -> Self {
        RawNameEntry { raw_text: raw_text.into(), rank_hint: Some(rank) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Repair {
    Trimmed,
    Recapitalized,
    HybridNormalized,
}

impl Repair {
    pub fn as_str(self) -> &'static str {
        match self {
            Repair::Trimmed => "TRIMMED",
            Repair::Recapitalized => "RECAPITALIZED",
            Repair::HybridNormalized => "HYBRID_NORMALIZED",
        }
    }
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedName {
    pub canonical_text: String,
    pub rank_hint: Option<Rank>,
    pub is_hybrid: bool,
    /// Every change applied, in a fixed order.
    pub repairs: Vec<Repair>,
}

impl NormalizedName {
    /// Wraps text that is sent to the backbone exactly as given.
    pub fn verbatim(text: &str, rank_hint: Option<Rank>) -> Self {
        NormalizedName {
            canonical_text: text.trim().to_string(),
            rank_hint,
            is_hybrid: text.contains(HYBRID_MARKER),
            repairs: Vec::new(),
        }
    }
}

impl fmt::Display for NormalizedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("name is empty")]
    Empty,
    #[error("name {name:?} contains disallowed character {found:?}")]
    DisallowedCharacter { name: String, found: char },
    #[error("name {0:?} has a hybrid marker with nothing to attach to")]
    DanglingMarker(String),
}

/// One whitespace-separated piece of a name, with hybrid markers split off.
struct Token<'a> {
    marked: bool,
    text: &'a str,
}

/// Canonicalizes a raw name.
pub fn normalize(entry: &RawNameEntry) -> Result<NormalizedName, NameError> {
    let raw = entry.raw_text.as_str();
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(NameError::Empty);
    }
    let words: Vec<&str> = trimmed.split_whitespace().collect();
    let mut repairs = Vec::new();
    if trimmed != raw || words.join(" ") != trimmed {
        repairs.push(Repair::Trimmed);
    }

    let tokens = tokenize(trimmed, &words)?;
    let is_hybrid = tokens.iter().any(|t| t.marked);

    let mut parts = Vec::with_capacity(tokens.len());
    let mut recapitalized = false;
    for (i, token) in tokens.iter().enumerate() {
        for c in token.text.chars() {
            if !(c.is_alphabetic() || c == '-') {
                return Err(NameError::DisallowedCharacter { name: trimmed.to_string(), found: c });
            }
        }
        let cased = if i == 0 { capitalize(token.text) } else { token.text.to_lowercase() };
        if cased != token.text {
            recapitalized = true;
        }
        parts.push(if token.marked { format!("{HYBRID_MARKER}{cased}") } else { cased });
    }
    if recapitalized {
        repairs.push(Repair::Recapitalized);
    }

    let canonical_text = parts.join(" ");
    // case differences are already covered by `Recapitalized`
    if is_hybrid && canonical_text.to_lowercase() != words.join(" ").to_lowercase() {
        repairs.push(Repair::HybridNormalized);
    }

    let rank_hint = entry.rank_hint.or(match tokens.len() {
        1 => Some(Rank::Genus),
        2 => Some(Rank::Species),
        3 => Some(Rank::Subspecies),
        _ => None,
    });
    Ok(NormalizedName { canonical_text, rank_hint, is_hybrid, repairs })
}

/// Query forms to try, in order. Hybrids yield the marker-attached form
/// first and the marker-free form second; other names yield only their
/// canonical text.
pub fn hybrid_candidates(name: &NormalizedName) -> Vec<String> {
    if !name.is_hybrid {
        return vec![name.canonical_text.clone()];
    }
    let bare = name
        .canonical_text
        .split_whitespace()
        .map(|w| w.trim_start_matches(HYBRID_MARKER))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = vec![name.canonical_text.clone()];
    if bare != name.canonical_text {
        out.push(bare);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NamesListError {
    pub line: usize,
    pub message: String,
}

/// Reads a names list: one name per line, `#` comments, and an optional
/// tab-separated rank hint (`Species`, `Genus`, `Subspecies`, ...).
pub fn parse_names_list(text: &str) -> Result<Vec<RawNameEntry>, NamesListError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = raw.split('\t');
        let name = fields.next().unwrap_or_default();
        let hint = fields.next().map(str::trim).filter(|h| !h.is_empty());
        if fields.next().is_some_and(|f| !f.trim().is_empty()) {
            return Err(NamesListError { line, message: "expected at most two tab-separated fields".into() });
        }
        let rank_hint = hint
            .map(|h| h.parse::<Rank>())
            .transpose()
            .map_err(|e| NamesListError { line, message: e.to_string() })?;
        out.push(RawNameEntry { raw_text: name.to_string(), rank_hint });
    }
    Ok(out)
}

/// Splits words into tokens, folding standalone `×`/`x` markers into the
/// following token.
fn tokenize<'a>(trimmed: &str, words: &[&'a str]) -> Result<Vec<Token<'a>>, NameError> {
    let mut tokens = Vec::with_capacity(words.len());
    let mut pending_marker = false;
    for (i, word) in words.iter().enumerate() {
        let standalone = *word == "×" || (matches!(*word, "x" | "X") && i > 0 && i + 1 < words.len());
        if standalone {
            if pending_marker || i + 1 == words.len() {
                return Err(NameError::DanglingMarker(trimmed.to_string()));
            }
            pending_marker = true;
            continue;
        }
        let (marked, text) = match word.strip_prefix(HYBRID_MARKER) {
            Some("") => return Err(NameError::DanglingMarker(trimmed.to_string())),
            Some(rest) => (true, rest),
            None => (false, *word),
        };
        if text.contains(HYBRID_MARKER) {
            return Err(NameError::DisallowedCharacter { name: trimmed.to_string(), found: HYBRID_MARKER });
        }
        tokens.push(Token { marked: marked || pending_marker, text });
        pending_marker = false;
    }
    Ok(tokens)
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
        None => String::new(),
    }
}
