//! Residual lexical cues in corrupted data: paraphrase pairs, sentiment
//! polarity words, and how well a masked predictor recovers removed words.

mod lexicon;
mod probe;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lexicon::{ParaphraseLexicon, Polarity, SentimentLexicon};
pub use probe::{BigramPredictor, CommandPredictor, MaskedPredictor};

use crate::annotation::{tokenize, AnnotationError, Tagger};
use crate::corruption::{make_cloze_pair, CorruptionError, WordClass};
use crate::par::{self, Execution};

#[derive(Debug, thiserror::Error)]
pub enum CueError {
    #[error("no examples to analyse")]
    EmptyInput,
    #[error("expected exactly one mask placeholder, found {found} in {text:?}")]
    MaskCount { found: usize, text: String },
    #[error("unknown polarity {0:?}")]
    UnknownPolarity(String),
    #[error("unknown variant {0:?}")]
    UnknownVariant(String),
    #[error("predictor failure: {0}")]
    Predictor(String),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A count over a denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub numerator: usize,
    pub denominator: usize,
}

impl Fraction {
    fn new(numerator: usize, denominator: usize) -> Result<Self, CueError> {
        if denominator == 0 {
            return Err(CueError::EmptyInput);
        }
        Ok(Fraction { numerator, denominator })
    }

    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text).iter().map(|t| t.text().to_lowercase()).collect()
}

/// True when some token of `a` and some token of `b` form a lexicon pair.
pub fn has_lexical_paraphrase(a: &str, b: &str, lexicon: &ParaphraseLexicon) -> bool {
    if lexicon.is_empty() && !lexicon.identity_matches() {
        return false;
    }
    let ta: BTreeSet<String> = lower_tokens(a).into_iter().collect();
    let tb: BTreeSet<String> = lower_tokens(b).into_iter().collect();
    ta.iter().any(|x| tb.iter().any(|y| lexicon.contains(x, y)))
}

/// Share of sentence pairs holding at least one lexical paraphrase.
pub fn paraphrase_retention<S: AsRef<str>>(
    pairs: &[(S, S)],
    lexicon: &ParaphraseLexicon,
) -> Result<Fraction, CueError> {
    let hits = pairs.iter().filter(|(a, b)| has_lexical_paraphrase(a.as_ref(), b.as_ref(), lexicon)).count();
    Fraction::new(hits, pairs.len())
}

/// Union of the polarities of every token found in the lexicon.
pub fn sentiment_labels(text: &str, lexicon: &SentimentLexicon) -> BTreeSet<Polarity> {
    lower_tokens(text).iter().filter_map(|w| lexicon.get(w)).flatten().copied().collect()
}

/// Share of examples whose gold polarity is among their sentiment labels.
pub fn sentiment_retention<S: AsRef<str>>(
    examples: &[(S, Polarity)],
    lexicon: &SentimentLexicon,
) -> Result<Fraction, CueError> {
    let hits = examples.iter().filter(|(text, gold)| sentiment_labels(text.as_ref(), lexicon).contains(gold)).count();
    Fraction::new(hits, examples.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClozeVariant {
    /// Only the first target word is masked.
    Original,
    /// The first target word is masked and the other target words removed.
    Corrupted,
}

impl ClozeVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ClozeVariant::Original => "ORIGINAL",
            ClozeVariant::Corrupted => "CORRUPTED",
        }
    }
}

impl fmt::Display for ClozeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClozeVariant {
    type Err = CueError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "original" => Ok(ClozeVariant::Original),
            "corrupted" | "corrupt" | "corrupt-test" => Ok(ClozeVariant::Corrupted),
            _ => Err(CueError::UnknownVariant(s.to_string())),
        }
    }
}

/// Lowercase and drop punctuation characters.
pub fn normalize_word(w: &str) -> String {
    w.chars().filter(|c| !c.is_ascii_punctuation() && !c.is_whitespace()).flat_map(char::to_lowercase).collect()
}

/// Cloze queries for every sentence that has a `class` token; sentences
/// without one are dropped.
pub fn cloze_queries<S: AsRef<str> + Sync>(
    sentences: &[S],
    class: WordClass,
    tagger: &dyn Tagger,
    mask: &str,
    exec: Execution,
) -> Result<Vec<crate::corruption::ClozeQueryPair>, CueError> {
    let pairs = par::try_map(sentences, exec, |_, s| make_cloze_pair(s.as_ref(), class, tagger, mask))?;
    Ok(pairs.into_iter().flatten().collect())
}

/// Fraction of cloze queries whose top prediction matches the removed word.
pub fn masked_prediction_accuracy<S: AsRef<str> + Sync>(
    sentences: &[S],
    class: WordClass,
    tagger: &dyn Tagger,
    predictor: &dyn MaskedPredictor,
    variant: ClozeVariant,
) -> Result<Fraction, CueError> {
    let exec = if predictor.is_thread_safe() { Execution::default() } else { Execution::Sequential };
    let queries = cloze_queries(sentences, class, tagger, predictor.mask_token(), exec)?;
    if queries.is_empty() {
        return Err(CueError::EmptyInput);
    }
    let texts: Vec<String> = queries
        .iter()
        .map(|q| match variant {
            ClozeVariant::Original => q.masked_original.clone(),
            ClozeVariant::Corrupted => q.masked_corrupted.clone(),
        })
        .collect();
    let answers = predictor.predict_batch(&texts)?;
    if answers.len() != queries.len() {
        return Err(CueError::Predictor(format!("{} answers for {} queries", answers.len(), queries.len())));
    }
    let hits =
        queries.iter().zip(&answers).filter(|(q, a)| normalize_word(a) == normalize_word(&q.removed_token)).count();
    Fraction::new(hits, queries.len())
}

/// JSON record written by every analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub analysis: String,
    pub task: String,
    pub word_class: Option<WordClass>,
    pub variant: Option<ClozeVariant>,
    pub numerator: usize,
    pub denominator: usize,
    pub fraction: f64,
}

impl AnalysisReport {
    pub fn new(
        analysis: &str,
        task: impl fmt::Display,
        word_class: Option<WordClass>,
        variant: Option<ClozeVariant>,
        f: Fraction,
    ) -> Self {
        AnalysisReport {
            analysis: analysis.to_string(),
            task: task.to_string(),
            word_class,
            variant,
            numerator: f.numerator,
            denominator: f.denominator,
            fraction: f.value(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::RuleTagger;
    use crate::corruption::corrupt_text;
    use proptest::prelude::*;

    fn lex(pairs: &[(&str, &str)]) -> ParaphraseLexicon {
        let mut l = ParaphraseLexicon::new();
        for (a, b) in pairs {
            l.insert(a, b);
        }
        l
    }

    #[test]
    fn paraphrase_membership() {
        let l = lex(&[("locate", "find")]);
        assert!(has_lexical_paraphrase("we will locate it", "they find it", &l));
        assert!(!has_lexical_paraphrase("we will locate it", "they find it", &ParaphraseLexicon::new()));
        assert!(!has_lexical_paraphrase("it rains", "it pours", &l));
    }

    #[test]
    fn identity_pairs_need_the_flag() {
        let tagger = RuleTagger::bundled();
        let a = corrupt_text(
            "Easynews Inc. was subpoenaed late last week by the FBI, which was seeking account information related to the uploading of the virus to the ISP's Usenet news group server.",
            WordClass::Noun,
            &tagger,
        )
        .unwrap();
        let b = corrupt_text(
            "Easynews Inc. said Monday that it was cooperating with the FBI in trying to locate the person who uploaded the virus to a Usenet news group hosted by the ISP.",
            WordClass::Noun,
            &tagger,
        )
        .unwrap();
        let (a, b) = (a.as_str(), b.as_str());
        let empty = ParaphraseLexicon::new();
        assert!(!has_lexical_paraphrase(a, b, &empty));
        // Shared surface words: was, by, the, to and the final stop.
        assert!(has_lexical_paraphrase(a, b, &empty.clone().with_identity_matches(true)));
        assert!(has_lexical_paraphrase(a, b, &lex(&[("was", "was")])));
        assert!(!has_lexical_paraphrase(a, b, &lex(&[("cooperating", "cooperating")])));
        assert!(has_lexical_paraphrase(a, b, &lex(&[("seeking", "locate")])));
    }

    #[test]
    fn retention_fixture() {
        let l = lex(&[("locate", "find"), ("big", "large"), ("quick", "fast")]);
        let pairs = [
            ("we will locate it", "they find it"),
            ("a big house", "a large home"),
            ("the quick fox", "the fast fox"),
            ("he slept", "she ate"),
        ];
        let f = paraphrase_retention(&pairs, &l).unwrap();
        assert_eq!((f.numerator, f.denominator), (3, 4));
        assert_eq!(f.value(), 0.75);
        assert_eq!(paraphrase_retention(&pairs[..3], &l).unwrap().value(), 1.0);
        let none: [(&str, &str); 0] = [];
        assert!(matches!(paraphrase_retention(&none, &l), Err(CueError::EmptyInput)));
    }

    #[test]
    fn sentiment_fixture() {
        let lex = SentimentLexicon::bundled();
        let s1 = "an unclassifiably awful in - and.";
        let s2 = "it proves quite compelling as an intense, brooding.";
        assert_eq!(sentiment_labels(s1, lex), BTreeSet::from([Polarity::Negative]));
        assert_eq!(sentiment_labels(s2, lex), BTreeSet::from([Polarity::Positive, Polarity::Negative]));
        assert!(sentiment_labels("", lex).is_empty());
        let f = sentiment_retention(&[(s1, Polarity::Negative), (s2, Polarity::Positive)], lex).unwrap();
        assert_eq!(f.value(), 1.0);
        let f = sentiment_retention(&[("zzz qqq", Polarity::Positive)], lex).unwrap();
        assert_eq!(f.value(), 0.0);
    }

    struct Fixed(&'static str);
    impl MaskedPredictor for Fixed {
        fn predict_top1(&self, text: &str) -> Result<String, CueError> {
            probe::check_single_mask(text, "[MASK]")?;
            Ok(self.0.to_string())
        }
    }

    struct Oracle(std::collections::HashMap<String, String>);
    impl MaskedPredictor for Oracle {
        fn predict_top1(&self, text: &str) -> Result<String, CueError> {
            Ok(self.0.get(text).cloned().unwrap_or_default())
        }
    }

    const FIVE: [&str; 5] = [
        "The cat sat on the mat.",
        "A dog barked at the cat.",
        "My cat likes fish.",
        "The bird sang a song.",
        "Her car is red.",
    ];

    #[test]
    fn cloze_accuracy_fixture() {
        let tagger = RuleTagger::bundled();
        // First nouns: cat, dog, cat, bird, car.
        for v in [ClozeVariant::Original, ClozeVariant::Corrupted] {
            let f = masked_prediction_accuracy(&FIVE, WordClass::Noun, &tagger, &Fixed("Cat"), v).unwrap();
            assert_eq!((f.numerator, f.denominator), (2, 5));
            assert_eq!(f.value(), 0.4);
        }
        let queries = cloze_queries(&FIVE, WordClass::Noun, &tagger, "[MASK]", Execution::Sequential).unwrap();
        let answers = queries
            .iter()
            .flat_map(|q| [q.masked_original.clone(), q.masked_corrupted.clone()].map(|t| (t, q.removed_token.clone())))
            .collect();
        let oracle = Oracle(answers);
        for v in [ClozeVariant::Original, ClozeVariant::Corrupted] {
            let f = masked_prediction_accuracy(&FIVE, WordClass::Noun, &tagger, &oracle, v).unwrap();
            assert_eq!(f.value(), 1.0);
        }
    }

    #[test]
    fn cloze_excludes_sentences_without_target_and_errors_when_none() {
        let tagger = RuleTagger::bundled();
        let sentences = ["The cat sat.", "It is so."];
        let f = masked_prediction_accuracy(&sentences, WordClass::Noun, &tagger, &Fixed("cat"), ClozeVariant::Original)
            .unwrap();
        assert_eq!((f.numerator, f.denominator), (1, 1));
        assert!(matches!(
            masked_prediction_accuracy(&["It is so."], WordClass::Noun, &tagger, &Fixed("x"), ClozeVariant::Original),
            Err(CueError::EmptyInput)
        ));
    }

    #[test]
    fn normalisation() {
        assert_eq!(normalize_word(" Study."), "study");
        assert_eq!(normalize_word("Ġstudy"), "ġstudy");
    }

    proptest! {
        #[test]
        fn symmetry_and_monotonicity(
            words in prop::collection::vec("[a-e]{1,2}", 2..8),
            extra in prop::collection::vec(("[a-e]{1,2}", "[a-e]{1,2}"), 0..6),
            base in prop::collection::vec(("[a-e]{1,2}", "[a-e]{1,2}"), 0..6),
        ) {
            let mid = words.len() / 2;
            let a = words[..mid].join(" ");
            let b = words[mid..].join(" ");
            let small = lex(&base.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect::<Vec<_>>());
            let mut big = small.clone();
            for (x, y) in &extra {
                big.insert(x, y);
            }
            prop_assert_eq!(has_lexical_paraphrase(&a, &b, &small), has_lexical_paraphrase(&b, &a, &small));
            let pairs = vec![(a.clone(), b.clone()), (b.clone(), a.clone()), (a.clone(), a.clone())];
            let fs = paraphrase_retention(&pairs, &small).unwrap().value();
            let fb = paraphrase_retention(&pairs, &big).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&fs));
            prop_assert!(fb >= fs);

            let mut s_small = SentimentLexicon::new();
            for (x, _) in &base {
                s_small.insert(x, Polarity::Positive);
            }
            let mut s_big = s_small.clone();
            for (x, _) in &extra {
                s_big.insert(x, Polarity::Negative);
            }
            let ex = vec![(a.clone(), Polarity::Positive), (b.clone(), Polarity::Negative)];
            let rs = sentiment_retention(&ex, &s_small).unwrap().value();
            let rb = sentiment_retention(&ex, &s_big).unwrap().value();
            prop_assert!((0.0..=1.0).contains(&rs));
            prop_assert!(rb >= rs);
        }
    }
}
