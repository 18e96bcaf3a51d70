use std::collections::HashMap;
use std::path::Path;

use super::{AnnotationError, Tagger, Token, UniversalMap, Upos};

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Lexicon + suffix-rule tagger producing Penn tags, reduced to universal tags.
///
/// Resolution order per token: punctuation and numerals, exact lexicon hit,
/// capitalised non-initial word (proper noun), lowercase lexicon hit,
/// sentence-initial capitalised unknown (proper noun), suffix rules, then
/// common noun.
#[derive(Debug, Clone)]
pub struct RuleTagger {
    id: String,
    lexicon: HashMap<String, String>,
    mapping: UniversalMap,
}

impl RuleTagger {
    pub fn bundled() -> Self {
        Self::from_lexicon_text("rules-bundled-v1", BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }

    pub fn from_lexicon_text(id: impl Into<String>, text: &str) -> Result<Self, AnnotationError> {
        let mut lexicon = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((word, tag)) = line.split_once('\t') else {
                return Err(AnnotationError::Malformed {
                    what: "tagger lexicon",
                    detail: format!("line {}: expected word<TAB>tag", lineno + 1),
                });
            };
            lexicon.insert(word.trim().to_string(), tag.trim().to_string());
        }
        Ok(RuleTagger { id: id.into(), lexicon, mapping: UniversalMap::bundled().clone() })
    }

    pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_lexicon_text(format!("rules:{}", path.display()), &text)
    }

    pub fn with_mapping(mut self, mapping: UniversalMap) -> Self {
        self.mapping = mapping;
        self
    }

    /// Adds or overrides a lexicon entry.
    pub fn insert(&mut self, word: impl Into<String>, fine_tag: impl Into<String>) {
        self.lexicon.insert(word.into(), fine_tag.into());
    }

    /// Penn tags for a token sequence.
    pub fn tag_fine(&self, tokens: &[Token]) -> Vec<String> {
        let mut tags: Vec<String> = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let prev = tags.last().map(String::as_str);
            let tag = self.tag_one(tok.text(), i == 0, prev);
            tags.push(tag);
        }
        tags
    }

    fn tag_one(&self, word: &str, initial: bool, prev: Option<&str>) -> String {
        if let Some(t) = punct_tag(word) {
            return t.to_string();
        }
        if is_numeral(word) {
            return "CD".into();
        }
        if let Some(t) = self.lexicon.get(word) {
            return t.clone();
        }
        let capitalised = word.chars().next().is_some_and(char::is_uppercase);
        if capitalised && !initial {
            return "NNP".into();
        }
        let lower = word.to_lowercase();
        if let Some(t) = self.lexicon.get(&lower) {
            return t.clone();
        }
        if capitalised {
            return "NNP".into();
        }
        suffix_tag(&lower, prev).to_string()
    }
}

fn punct_tag(word: &str) -> Option<&'static str> {
    if word.chars().any(char::is_alphanumeric) {
        return None;
    }
    Some(match word {
        "," => ",",
        "." | "!" | "?" | "..." => ".",
        "(" | "[" | "{" => "(",
        ")" | "]" | "}" => ")",
        "\"" | "``" => "``",
        "''" => "''",
        "$" => "$",
        "#" => "#",
        _ => ":",
    })
}

fn is_numeral(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_digit())
        && word.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '/' | ':' | '%'))
}

const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "ive", "able", "ible", "less", "ish", "ical", "ic"];

fn suffix_tag(lower: &str, prev: Option<&str>) -> &'static str {
    if matches!(prev, Some("TO") | Some("MD")) {
        return "VB";
    }
    if let Some((_, last)) = lower.rsplit_once('-') {
        if !last.is_empty() && ADJ_SUFFIXES.iter().any(|s| last.ends_with(s)) {
            return "JJ";
        }
        return "NN";
    }
    if lower.ends_with("ly") && lower.len() > 3 {
        return "RB";
    }
    if lower.ends_with("ing") && lower.len() > 4 {
        // Gerund after a determiner or adjective reads as a noun.
        return match prev {
            Some("DT") | Some("PRP$") | Some("POS") | Some("JJ") => "NN",
            _ => "VBG",
        };
    }
    if lower.ends_with("ed") && lower.len() > 3 {
        return match prev {
            Some("VBD") | Some("VBZ") | Some("VBP") | Some("VB") | Some("VBN") => "VBN",
            _ => "VBD",
        };
    }
    if ADJ_SUFFIXES.iter().any(|s| lower.ends_with(s)) && lower.len() > 4 {
        return "JJ";
    }
    if lower.ends_with("est") && lower.len() > 5 {
        return "JJS";
    }
    if lower.ends_with('s')
        && !lower.ends_with("ss")
        && !lower.ends_with("us")
        && !lower.ends_with("is")
        && lower.len() > 2
    {
        return match prev {
            Some("PRP") | Some("NN") | Some("NNP") | Some("WP") | Some("WDT") => "VBZ",
            _ => "NNS",
        };
    }
    "NN"
}

impl Tagger for RuleTagger {
    fn model_id(&self) -> &str {
        &self.id
    }

    fn tag_upos(&self, tokens: &[Token]) -> Result<Vec<Upos>, AnnotationError> {
        Ok(self.tag_fine(tokens).iter().map(|t| self.mapping.map(t)).collect())
    }
}
