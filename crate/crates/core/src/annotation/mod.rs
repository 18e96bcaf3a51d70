//! Tokenization, detokenization and universal part-of-speech tagging.
//!
//! Tagging goes through the [`Tagger`] trait. Two implementations ship:
//! [`RuleTagger`], a bundled lexicon + suffix-rule tagger that needs no
//! external files, and [`PerceptronTagger`], which loads pre-trained
//! averaged-perceptron weights.

mod perceptron;
mod rules;
mod tokenize;
mod universal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use perceptron::{PerceptronModel, PerceptronTagger, WEIGHTS_FORMAT_VERSION};
pub use rules::RuleTagger;
pub use tokenize::{detokenize, tokenize, tokenize_words};
pub use universal::{map_to_universal, UniversalMap};

#[derive(Debug, thiserror::Error)]
pub enum AnnotationError {
    #[error("tagger is not loaded: {0}")]
    TaggerNotLoaded(String),
    #[error("tagger {0} is not deterministic")]
    NonDeterministic(String),
    #[error("tagger returned {got} tags for {expected} tokens")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unsupported weights format version {found:?} (expected {expected:?})")]
    FormatVersion { found: String, expected: String },
    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Universal part-of-speech class.
///
/// The first eight variants are the removable word classes; see
/// [`crate::corruption::WordClass`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adv,
    Conj,
    Det,
    Noun,
    Num,
    Pron,
    Verb,
    Adp,
    Prt,
    Punct,
    X,
}

impl Upos {
    pub const ALL: [Upos; 12] = [
        Upos::Adj,
        Upos::Adv,
        Upos::Conj,
        Upos::Det,
        Upos::Noun,
        Upos::Num,
        Upos::Pron,
        Upos::Verb,
        Upos::Adp,
        Upos::Prt,
        Upos::Punct,
        Upos::X,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Upos::Adj => "ADJ",
            Upos::Adv => "ADV",
            Upos::Conj => "CONJ",
            Upos::Det => "DET",
            Upos::Noun => "NOUN",
            Upos::Num => "NUM",
            Upos::Pron => "PRON",
            Upos::Verb => "VERB",
            Upos::Adp => "ADP",
            Upos::Prt => "PRT",
            Upos::Punct => "PUNCT",
            Upos::X => "X",
        }
    }
}

impl fmt::Display for Upos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Upos {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // "." is the punctuation label used by the common mapping tables.
        if s == "." {
            return Ok(Upos::Punct);
        }
        Upos::ALL
            .iter()
            .copied()
            .find(|u| u.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnnotationError::Malformed { what: "universal tag", detail: s.to_string() })
    }
}

/// A whitespace-free surface token with its position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    index: usize,
}

impl Token {
    /// Returns `None` for empty text or text containing whitespace.
    pub fn new(text: impl Into<String>, index: usize) -> Option<Self> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return None;
        }
        Some(Token { text, index })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn index(&self) -> usize {
        self.index
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedToken {
    pub token: Token,
    pub upos: Upos,
}

/// A part-of-speech tagger producing universal tags.
///
/// Implementations are immutable once constructed and must return the same
/// tags for the same input every time.
pub trait Tagger: Send + Sync {
    fn model_id(&self) -> &str;

    fn is_deterministic(&self) -> bool {
        true
    }

    /// One universal tag per input token.
    fn tag_upos(&self, tokens: &[Token]) -> Result<Vec<Upos>, AnnotationError>;
}

/// Tags `tokens`, checking the tagger's contract on the way out.
pub fn tag(tokens: &[Token], tagger: &dyn Tagger) -> Result<Vec<TaggedToken>, AnnotationError> {
    if !tagger.is_deterministic() {
        return Err(AnnotationError::NonDeterministic(tagger.model_id().to_string()));
    }
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let tags = tagger.tag_upos(tokens)?;
    if tags.len() != tokens.len() {
        return Err(AnnotationError::LengthMismatch { expected: tokens.len(), got: tags.len() });
    }
    Ok(tokens.iter().cloned().zip(tags).map(|(token, upos)| TaggedToken { token, upos }).collect())
}

/// Tokenizes and tags a raw string in one go.
pub fn annotate(text: &str, tagger: &dyn Tagger) -> Result<Vec<TaggedToken>, AnnotationError> {
    tag(&tokenize(text), tagger)
}
