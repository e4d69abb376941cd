//! Mapping free-form query terms onto labels present in a scene.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::OltError;
use crate::olt::SceneOlt;
use crate::segmentation::normalize_label;

/// Minimum normalized similarity for a fuzzy match.
pub const FUZZY_THRESHOLD: f64 = 0.75;

/// Aliases shipped with the binary; user config is merged over these.
pub const DEFAULT_ALIASES_JSON: &str = include_str!("default_aliases.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionMethod {
    Exact,
    Alias,
    Fuzzy,
    /// Label chosen by the language model from query context.
    Context,
}

impl ResolutionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Alias => "alias",
            Self::Fuzzy => "fuzzy",
            Self::Context => "context",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub term: String,
    pub label: String,
    pub method: ResolutionMethod,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelVocabulary {
    pub labels: BTreeSet<String>,
    pub aliases: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct AliasFile {
    aliases: BTreeMap<String, String>,
}

/// Parses `{"aliases": {alias: label}}`; keys and values are normalized.
pub fn parse_aliases(bytes: &[u8]) -> Result<BTreeMap<String, String>, OltError> {
    let file: AliasFile = serde_json::from_slice(bytes).map_err(|e| OltError::MalformedAliases(e.to_string()))?;
    Ok(file
        .aliases
        .into_iter()
        .map(|(k, v)| (normalize_label(&k), normalize_label(&v)))
        .collect())
}

pub fn default_aliases() -> BTreeMap<String, String> {
    parse_aliases(DEFAULT_ALIASES_JSON.as_bytes()).expect("bundled alias file is valid")
}

impl LabelVocabulary {
    pub fn new(labels: impl IntoIterator<Item = String>, aliases: BTreeMap<String, String>) -> Self {
        Self { labels: labels.into_iter().collect(), aliases }
    }

    pub fn from_olt(olt: &SceneOlt, aliases: BTreeMap<String, String>) -> Self {
        Self { labels: olt.labels(), aliases }
    }
}

/// Plural folding used before fuzzy comparison.
pub fn singularize(term: &str) -> String {
    term.split(' ')
        .map(|w| {
            if let Some(stem) = w.strip_suffix("ies") {
                if !stem.is_empty() {
                    return format!("{stem}y");
                }
            }
            if w.len() > 2 && w.ends_with('s') && !w.ends_with("ss") {
                return w[..w.len() - 1].to_string();
            }
            w.to_string()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `1 - levenshtein / max_len`, over chars.
pub fn similarity(a: &str, b: &str) -> f64 {
    strsim::normalized_levenshtein(a, b)
}

fn best_fuzzy(term: &str, labels: &BTreeSet<String>) -> Option<(String, f64)> {
    let folded = singularize(term);
    let mut best: Option<(String, f64)> = None;
    // BTreeSet iterates lexicographically, so strict `>` keeps the first of equals.
    for label in labels {
        let s = similarity(term, label).max(similarity(&folded, label));
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((label.clone(), s));
        }
    }
    best
}

/// Exact match, then alias table, then fuzzy match at or above
/// [`FUZZY_THRESHOLD`] with lexicographic tie-break.
pub fn resolve_label(term: &str, vocab: &LabelVocabulary) -> Result<Resolution, OltError> {
    let norm = normalize_label(term);
    let found = |label: String, method| Ok(Resolution { term: term.to_string(), label, method });
    if norm.is_empty() {
        return Err(OltError::UnknownLabel { term: term.to_string(), best: None, similarity: 0.0 });
    }
    if vocab.labels.contains(&norm) {
        return found(norm, ResolutionMethod::Exact);
    }
    let alias = vocab.aliases.get(&norm).or_else(|| vocab.aliases.get(&singularize(&norm)));
    if let Some(target) = alias {
        if vocab.labels.contains(target) {
            return found(target.clone(), ResolutionMethod::Alias);
        }
        if let Some((label, s)) = best_fuzzy(target, &vocab.labels) {
            if s >= FUZZY_THRESHOLD {
                return found(label, ResolutionMethod::Alias);
            }
        }
    }
    match best_fuzzy(&norm, &vocab.labels) {
        Some((label, s)) if s >= FUZZY_THRESHOLD => found(label, ResolutionMethod::Fuzzy),
        Some((label, s)) => Err(OltError::UnknownLabel { term: term.to_string(), best: Some(label), similarity: s }),
        None => Err(OltError::UnknownLabel { term: term.to_string(), best: None, similarity: 0.0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(labels: &[&str]) -> LabelVocabulary {
        LabelVocabulary::new(labels.iter().map(|s| s.to_string()), default_aliases())
    }

    #[test]
    fn alias_table_maps_fridge() {
        let v = LabelVocabulary::new(
            ["kitchen cabinet".to_string(), "chair".to_string()],
            [("fridge".to_string(), "kitchen cabinet".to_string())].into_iter().collect(),
        );
        let r = resolve_label("fridge", &v).unwrap();
        assert_eq!(r.label, "kitchen cabinet");
        assert_eq!(r.method, ResolutionMethod::Alias);
    }

    #[test]
    fn default_aliases_cover_board_and_fridge() {
        let v = vocab(&["tv", "kitchen cabinet"]);
        assert_eq!(resolve_label("board", &v).unwrap().label, "tv");
        assert_eq!(resolve_label("Fridge", &v).unwrap().label, "kitchen cabinet");
    }

    #[test]
    fn plural_resolves_fuzzily() {
        let r = resolve_label("chairs", &vocab(&["chair"])).unwrap();
        assert_eq!((r.label.as_str(), r.method), ("chair", ResolutionMethod::Fuzzy));
        assert_eq!(singularize("shelves"), "shelve");
        assert_eq!(singularize("bookshelves"), "bookshelve");
        assert_eq!(singularize("libraries"), "library");
        assert_eq!(singularize("glass"), "glass");
    }

    #[test]
    fn exact_wins_over_alias() {
        let v = vocab(&["board", "tv"]);
        let r = resolve_label("board", &v).unwrap();
        assert_eq!((r.label.as_str(), r.method), ("board", ResolutionMethod::Exact));
    }

    #[test]
    fn tie_break_is_lexicographic() {
        // "cat" is one edit from both "bat" and "cab".
        let v = LabelVocabulary::new(["cab".to_string(), "bat".to_string()], BTreeMap::new());
        let best = best_fuzzy("cat", &v.labels).unwrap();
        assert_eq!(best.0, "bat");
    }

    #[test]
    fn unknown_label() {
        assert!(matches!(
            resolve_label("xylophone", &vocab(&["chair", "table"])),
            Err(OltError::UnknownLabel { .. })
        ));
        assert!(matches!(resolve_label("   ", &vocab(&["chair"])), Err(OltError::UnknownLabel { .. })));
    }

    #[test]
    fn alias_to_missing_label_falls_back_to_fuzzy_on_target() {
        let v = LabelVocabulary::new(
            ["kitchen cabinets".to_string()],
            [("fridge".to_string(), "kitchen cabinet".to_string())].into_iter().collect(),
        );
        let r = resolve_label("fridge", &v).unwrap();
        assert_eq!((r.label.as_str(), r.method), ("kitchen cabinets", ResolutionMethod::Alias));
    }
}
