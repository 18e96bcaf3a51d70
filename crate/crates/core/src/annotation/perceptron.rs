//! Averaged-perceptron tagger inference over pre-trained weights.
//!
//! Feature templates, word normalisation and tie-breaking follow the widely
//! used greedy left-to-right averaged perceptron (as in NLTK), so weights
//! exported from that tagger reproduce its output. Training is out of scope;
//! `scripts/convert_nltk_tagger.py` converts NLTK's published weights to the
//! file format read here.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotationError, Tagger, Token, UniversalMap, Upos};

pub const WEIGHTS_FORMAT_VERSION: &str = "nludiag-averaged-perceptron/1";

const START: [&str; 2] = ["-START-", "-START2-"];
const END: [&str; 2] = ["-END-", "-END2-"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTagset {
    /// Classes are Penn Treebank tags, reduced through a [`UniversalMap`].
    #[default]
    Penn,
    /// Classes are already universal tags.
    Universal,
}

/// Serialized tagger weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronModel {
    pub format_version: String,
    pub model_id: String,
    #[serde(default)]
    pub tagset: ClassTagset,
    pub classes: Vec<String>,
    /// Unambiguous frequent words, tagged without scoring.
    #[serde(default)]
    pub tagdict: BTreeMap<String, String>,
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
}

impl PerceptronModel {
    pub fn new(model_id: impl Into<String>) -> Self {
        PerceptronModel {
            format_version: WEIGHTS_FORMAT_VERSION.to_string(),
            model_id: model_id.into(),
            tagset: ClassTagset::Penn,
            classes: Vec::new(),
            tagdict: BTreeMap::new(),
            weights: BTreeMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        let model: PerceptronModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if model.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(AnnotationError::FormatVersion {
                found: model.format_version,
                expected: WEIGHTS_FORMAT_VERSION.to_string(),
            });
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AnnotationError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PerceptronTagger {
    model: PerceptronModel,
    weights: HashMap<String, Vec<(usize, f64)>>,
    mapping: UniversalMap,
}

impl PerceptronTagger {
    pub fn from_model(model: PerceptronModel) -> Self {
        let mut classes = model.classes.clone();
        classes.sort();
        classes.dedup();
        let class_index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let weights = model
            .weights
            .iter()
            .map(|(feat, per_class)| {
                let row = per_class.iter().filter_map(|(c, w)| class_index.get(c.as_str()).map(|&i| (i, *w))).collect();
                (feat.clone(), row)
            })
            .collect();
        let model = PerceptronModel { classes, ..model };
        PerceptronTagger { model, weights, mapping: UniversalMap::bundled().clone() }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnnotationError> {
        Ok(Self::from_model(PerceptronModel::load(path)?))
    }

    pub fn with_mapping(mut self, mapping: UniversalMap) -> Self {
        self.mapping = mapping;
        self
    }

    pub fn model(&self) -> &PerceptronModel {
        &self.model
    }

    pub fn is_loaded(&self) -> bool {
        !self.model.classes.is_empty()
    }

    /// Fine-grained tags, greedy left to right.
    pub fn tag_fine(&self, tokens: &[Token]) -> Result<Vec<String>, AnnotationError> {
        if !self.is_loaded() {
            return Err(AnnotationError::TaggerNotLoaded(format!("{} has no classes", self.model.model_id)));
        }
        let context: Vec<String> = START
            .iter()
            .map(|s| s.to_string())
            .chain(tokens.iter().map(|t| normalize(t.text())))
            .chain(END.iter().map(|s| s.to_string()))
            .collect();
        let mut prev = START[0].to_string();
        let mut prev2 = START[1].to_string();
        let mut out = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            let word = tok.text();
            let tag = match self.model.tagdict.get(word) {
                Some(t) => t.clone(),
                None => self.predict(&features(i, word, &context, &prev, &prev2)),
            };
            prev2 = std::mem::replace(&mut prev, tag.clone());
            out.push(tag);
        }
        Ok(out)
    }

    fn predict(&self, features: &[(String, f64)]) -> String {
        let mut scores = vec![0.0f64; self.model.classes.len()];
        for (feat, value) in features {
            if *value == 0.0 {
                continue;
            }
            if let Some(row) = self.weights.get(feat) {
                for &(class, w) in row {
                    scores[class] += value * w;
                }
            }
        }
        // Highest score wins; ties go to the lexicographically largest class.
        let best = scores
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.total_cmp(b).then_with(|| self.model.classes[*i].cmp(&self.model.classes[*j])))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.model.classes[best].clone()
    }
}

fn normalize(word: &str) -> String {
    if word.contains('-') && !word.starts_with('-') {
        "!HYPHEN".into()
    } else if word.chars().count() == 4 && word.chars().all(|c| c.is_ascii_digit()) {
        "!YEAR".into()
    } else if word.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        "!DIGIT".into()
    } else {
        word.to_lowercase()
    }
}

fn last_chars(s: &str, n: usize) -> &str {
    match s.char_indices().rev().nth(n.saturating_sub(1)) {
        Some((i, _)) if n > 0 => &s[i..],
        _ => s,
    }
}

fn features(i: usize, word: &str, context: &[String], prev: &str, prev2: &str) -> Vec<(String, f64)> {
    let i = i + START.len();
    let first = word.chars().next().map(String::from).unwrap_or_default();
    let raw = [
        "bias".to_string(),
        format!("i suffix {}", last_chars(word, 3)),
        format!("i pref1 {first}"),
        format!("i-1 tag {prev}"),
        format!("i-2 tag {prev2}"),
        format!("i tag+i-2 tag {prev} {prev2}"),
        format!("i word {}", context[i]),
        format!("i-1 tag+i word {prev} {}", context[i]),
        format!("i-1 word {}", context[i - 1]),
        format!("i-1 suffix {}", last_chars(&context[i - 1], 3)),
        format!("i-2 word {}", context[i - 2]),
        format!("i+1 word {}", context[i + 1]),
        format!("i+1 suffix {}", last_chars(&context[i + 1], 3)),
        format!("i+2 word {}", context[i + 2]),
    ];
    let mut out: Vec<(String, f64)> = Vec::with_capacity(raw.len());
    for f in raw {
        match out.iter_mut().find(|(k, _)| *k == f) {
            Some((_, v)) => *v += 1.0,
            None => out.push((f, 1.0)),
        }
    }
    out
}

impl Tagger for PerceptronTagger {
    fn model_id(&self) -> &str {
        &self.model.model_id
    }

    fn tag_upos(&self, tokens: &[Token]) -> Result<Vec<Upos>, AnnotationError> {
        let fine = self.tag_fine(tokens)?;
        Ok(fine
            .iter()
            .map(|t| match self.model.tagset {
                ClassTagset::Penn => self.mapping.map(t),
                ClassTagset::Universal => t.parse().unwrap_or(Upos::X),
            })
            .collect())
    }
}
