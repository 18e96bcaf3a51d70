//! Paraphrase and polarity lexicons.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::CueError;

/// Unordered pairs of lowercase words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParaphraseLexicon {
    pairs: HashSet<(String, String)>,
    identity: bool,
}

fn ordered(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ParaphraseLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads `word TAB word` lines or PPDB rules
    /// (`LHS ||| phrase ||| paraphrase ||| ...`); PPDB rules with a
    /// multi-word side are skipped. Returns the lexicon and the number of
    /// malformed lines skipped.
    pub fn parse(text: &str) -> (Self, usize) {
        let mut lex = Self::new();
        let mut skipped = 0;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let pair = if line.contains("|||") {
                let cols: Vec<&str> = line.split("|||").map(str::trim).collect();
                match cols.as_slice() {
                    [_, a, b, ..] if is_word(a) && is_word(b) => Some((*a, *b)),
                    [_, _, _, ..] => {
                        continue;
                    }
                    _ => None,
                }
            } else {
                match line.split('\t').map(str::trim).collect::<Vec<_>>().as_slice() {
                    [a, b] if is_word(a) && is_word(b) => Some((*a, *b)),
                    _ => None,
                }
            };
            match pair {
                Some((a, b)) => lex.insert(a, b),
                None => skipped += 1,
            }
        }
        if skipped > 0 {
            log::warn!("paraphrase lexicon: skipped {skipped} malformed lines");
        }
        (lex, skipped)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CueError> {
        Ok(Self::parse(&std::fs::read_to_string(path)?).0)
    }

    pub fn insert(&mut self, a: &str, b: &str) {
        self.pairs.insert(ordered(a, b));
    }

    /// Counts a word shared verbatim by both sentences as a paraphrase even
    /// when the identity pair is not listed.
    pub fn with_identity_matches(mut self, on: bool) -> Self {
        self.identity = on;
        self
    }

    pub fn identity_matches(&self) -> bool {
        self.identity
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        let (a, b) = ordered(a, b);
        (self.identity && a == b) || self.pairs.contains(&(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }

    /// SST-2 label convention: 1 positive, 0 negative.
    pub fn from_sst2_label(label: f64) -> Option<Self> {
        if label == 1.0 {
            Some(Polarity::Positive)
        } else if label == 0.0 {
            Some(Polarity::Negative)
        } else {
            None
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = CueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            _ => Err(CueError::UnknownPolarity(s.to_string())),
        }
    }
}

/// Lowercase word to a non-empty set of polarities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    entries: BTreeMap<String, BTreeSet<Polarity>>,
}

const BUNDLED_POLARITY: &str = include_str!("../../data/polarity.tsv");

impl SentimentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The polarity list shipped with the crate.
    pub fn bundled() -> &'static SentimentLexicon {
        static LEX: OnceLock<SentimentLexicon> = OnceLock::new();
        LEX.get_or_init(|| Self::parse(BUNDLED_POLARITY).0)
    }

    /// Reads `word TAB polarity` lines, or the NRC three-column format
    /// `word TAB emotion TAB 0|1`, keeping only the two polarity keys.
    /// Returns the lexicon and the number of malformed lines skipped.
    pub fn parse(text: &str) -> (Self, usize) {
        let mut lex = Self::new();
        let mut skipped = 0;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            match cols.as_slice() {
                [w, p] if is_word(w) => match p.parse() {
                    Ok(p) => lex.insert(w, p),
                    Err(_) => skipped += 1,
                },
                [w, key, flag] if is_word(w) && (*flag == "0" || *flag == "1") => {
                    if let (Ok(p), "1") = (key.parse::<Polarity>(), *flag) {
                        lex.insert(w, p);
                    }
                }
                _ => skipped += 1,
            }
        }
        if skipped > 0 {
            log::warn!("sentiment lexicon: skipped {skipped} malformed lines");
        }
        (lex, skipped)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CueError> {
        Ok(Self::parse(&std::fs::read_to_string(path)?).0)
    }

    pub fn insert(&mut self, word: &str, polarity: Polarity) {
        self.entries.entry(word.to_lowercase()).or_default().insert(polarity);
    }

    pub fn get(&self, word: &str) -> Option<&BTreeSet<Polarity>> {
        self.entries.get(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeSet<Polarity>)> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p))
    }
}
