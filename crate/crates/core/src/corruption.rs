//! Word-class removal over texts, records and whole splits, the experiment
//! configuration matrix, and cloze query generation.
//!
//! Tags are computed once on the original sentence; removal never re-tags.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annotation::{self, detokenize, AnnotationError, TaggedToken, Tagger, Upos};
use crate::dataset::{DatasetSplit, Record, Task, TaskSchema};
use crate::harness::ExperimentConfig;
use crate::par::{self, Execution};

#[derive(Debug, thiserror::Error)]
pub enum CorruptionError {
    #[error("record {record}: schema mismatch, text field {field:?} is absent")]
    SchemaMismatch { record: usize, field: String },
    #[error("empty {0} axis")]
    EmptyAxis(&'static str),
    #[error("mask token must be non-empty")]
    EmptyMask,
    #[error("text already contains the mask token {0:?}")]
    MaskInText(String),
    #[error("unknown word class {0:?}")]
    UnknownWordClass(String),
    #[error("unknown corruption setting {0:?}")]
    UnknownSetting(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
}

/// A removable word class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WordClass {
    Adj,
    Adv,
    Conj,
    Det,
    Noun,
    Num,
    Pron,
    Verb,
}

impl WordClass {
    pub const ALL: [WordClass; 8] = [
        WordClass::Adj,
        WordClass::Adv,
        WordClass::Conj,
        WordClass::Det,
        WordClass::Noun,
        WordClass::Num,
        WordClass::Pron,
        WordClass::Verb,
    ];

    pub fn upos(self) -> Upos {
        match self {
            WordClass::Adj => Upos::Adj,
            WordClass::Adv => Upos::Adv,
            WordClass::Conj => Upos::Conj,
            WordClass::Det => Upos::Det,
            WordClass::Noun => Upos::Noun,
            WordClass::Num => Upos::Num,
            WordClass::Pron => Upos::Pron,
            WordClass::Verb => Upos::Verb,
        }
    }

    pub fn from_upos(u: Upos) -> Option<Self> {
        WordClass::ALL.iter().copied().find(|c| c.upos() == u)
    }

    /// Lowercase name used in dataset labels ("noun" in "cola-noun").
    pub fn as_lower(self) -> &'static str {
        match self {
            WordClass::Adj => "adj",
            WordClass::Adv => "adv",
            WordClass::Conj => "conj",
            WordClass::Det => "det",
            WordClass::Noun => "noun",
            WordClass::Num => "num",
            WordClass::Pron => "pron",
            WordClass::Verb => "verb",
        }
    }
}

impl fmt::Display for WordClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_lower())
    }
}

impl FromStr for WordClass {
    type Err = CorruptionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        WordClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_lower().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| CorruptionError::UnknownWordClass(s.to_string()))
    }
}

impl TryFrom<String> for WordClass {
    type Error = CorruptionError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WordClass> for String {
    fn from(c: WordClass) -> String {
        c.as_lower().to_string()
    }
}

/// Which splits a corruption applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CorruptionSetting {
    /// Corrupted training data, original evaluation data.
    CorruptTrain,
    /// Original training data, corrupted evaluation data.
    CorruptTest,
    CorruptTrainAndTest,
}

impl CorruptionSetting {
    pub const ALL: [CorruptionSetting; 3] =
        [CorruptionSetting::CorruptTrain, CorruptionSetting::CorruptTest, CorruptionSetting::CorruptTrainAndTest];

    pub fn corrupts_train(self) -> bool {
        matches!(self, Self::CorruptTrain | Self::CorruptTrainAndTest)
    }

    pub fn corrupts_eval(self) -> bool {
        matches!(self, Self::CorruptTest | Self::CorruptTrainAndTest)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CorruptTrain => "corrupt-train",
            Self::CorruptTest => "corrupt-test",
            Self::CorruptTrainAndTest => "corrupt-train-and-test",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Self::CorruptTrain => "Corrupt-Train",
            Self::CorruptTest => "Corrupt-Test",
            Self::CorruptTrainAndTest => "Corrupt-Train and Test",
        }
    }
}

impl fmt::Display for CorruptionSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorruptionSetting {
    type Err = CorruptionError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase().replace('_', "-");
        Ok(match norm.as_str() {
            "corrupt-train" | "train" | "a" => Self::CorruptTrain,
            "corrupt-test" | "test" | "b" => Self::CorruptTest,
            "corrupt-train-and-test" | "train-and-test" | "both" | "c" => Self::CorruptTrainAndTest,
            _ => return Err(CorruptionError::UnknownSetting(s.to_string())),
        })
    }
}

impl TryFrom<String> for CorruptionSetting {
    type Error = CorruptionError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<CorruptionSetting> for String {
    fn from(s: CorruptionSetting) -> String {
        s.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CorruptionSpec {
    word_class: WordClass,
    setting: CorruptionSetting,
}

impl CorruptionSpec {
    pub fn new(word_class: WordClass, setting: CorruptionSetting) -> Self {
        CorruptionSpec { word_class, setting }
    }

    pub fn word_class(&self) -> WordClass {
        self.word_class
    }

    pub fn setting(&self) -> CorruptionSetting {
        self.setting
    }

    /// Dataset label such as `cola-noun`.
    pub fn label(&self, task: Task) -> String {
        format!("{}-{}", task, self.word_class)
    }
}

/// Tokens whose tag is not `class`, in order.
pub fn remove_class(tagged: &[TaggedToken], class: WordClass) -> Vec<TaggedToken> {
    let target = class.upos();
    tagged.iter().filter(|t| t.upos != target).cloned().collect()
}

pub fn render(tagged: &[TaggedToken]) -> String {
    detokenize(&tagged.iter().map(|t| t.token.text()).collect::<Vec<_>>())
}

/// Removes every token of `class` from `text`.
pub fn corrupt_text(text: &str, class: WordClass, tagger: &dyn Tagger) -> Result<String, AnnotationError> {
    let tagged = annotation::annotate(text, tagger)?;
    Ok(render(&remove_class(&tagged, class)))
}

fn corrupt_record_at(
    index: usize,
    record: &Record,
    schema: &TaskSchema,
    class: WordClass,
    tagger: &dyn Tagger,
) -> Result<Record, CorruptionError> {
    let mut out = record.clone();
    for field in &schema.text_fields {
        let text = record
            .text(field)
            .ok_or_else(|| CorruptionError::SchemaMismatch { record: index, field: field.to_string() })?;
        out.set(field, corrupt_text(text, class, tagger)?);
    }
    Ok(out)
}

/// Corrupts every text field of a record; other fields are copied untouched.
pub fn corrupt_record(
    record: &Record,
    schema: &TaskSchema,
    class: WordClass,
    tagger: &dyn Tagger,
) -> Result<Record, CorruptionError> {
    corrupt_record_at(0, record, schema, class, tagger)
}

/// Corrupts a sequence of records, keeping cardinality and order.
pub fn corrupt_records(
    records: &[Record],
    schema: &TaskSchema,
    class: WordClass,
    tagger: &dyn Tagger,
    exec: Execution,
) -> Result<Vec<Record>, CorruptionError> {
    par::try_map(records, exec, |i, r| corrupt_record_at(i, r, schema, class, tagger))
}

/// Corrupts a whole split and stamps its provenance.
pub fn corrupt_split(
    dataset: &DatasetSplit,
    class: WordClass,
    tagger: &dyn Tagger,
) -> Result<DatasetSplit, CorruptionError> {
    corrupt_split_with(dataset, class, tagger, Execution::default())
}

pub fn corrupt_split_with(
    dataset: &DatasetSplit,
    class: WordClass,
    tagger: &dyn Tagger,
    exec: Execution,
) -> Result<DatasetSplit, CorruptionError> {
    let records = corrupt_records(&dataset.records, &dataset.schema(), class, tagger, exec)?;
    Ok(DatasetSplit { task: dataset.task, split: dataset.split, records, provenance: Some(class) })
}

/// Cartesian product of tasks, classes and settings, ordered task-major.
pub fn enumerate_configs(
    tasks: &BTreeSet<Task>,
    classes: &BTreeSet<WordClass>,
    settings: &BTreeSet<CorruptionSetting>,
) -> Result<Vec<ExperimentConfig>, CorruptionError> {
    if tasks.is_empty() {
        return Err(CorruptionError::EmptyAxis("task"));
    }
    if classes.is_empty() {
        return Err(CorruptionError::EmptyAxis("word class"));
    }
    if settings.is_empty() {
        return Err(CorruptionError::EmptyAxis("setting"));
    }
    let mut out = Vec::with_capacity(tasks.len() * classes.len() * settings.len());
    for &task in tasks {
        for &class in classes {
            for &setting in settings {
                out.push(ExperimentConfig::corrupted(task, CorruptionSpec::new(class, setting)));
            }
        }
    }
    Ok(out)
}

/// Masked-token queries built from one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeQueryPair {
    /// Original sentence with its first target-class token masked.
    pub masked_original: String,
    /// Same mask, with every other target-class token removed.
    pub masked_corrupted: String,
    pub removed_token: String,
}

/// Builds the cloze pair for the first `class` token of `text`, or `None`
/// when the sentence has no such token.
pub fn make_cloze_pair(
    text: &str,
    class: WordClass,
    tagger: &dyn Tagger,
    mask_token: &str,
) -> Result<Option<ClozeQueryPair>, CorruptionError> {
    if mask_token.is_empty() {
        return Err(CorruptionError::EmptyMask);
    }
    if text.contains(mask_token) {
        return Err(CorruptionError::MaskInText(mask_token.to_string()));
    }
    let tagged = annotation::annotate(text, tagger)?;
    let target = class.upos();
    let Some(first) = tagged.iter().position(|t| t.upos == target) else {
        return Ok(None);
    };
    fn word<'a>(i: usize, t: &'a TaggedToken, first: usize, mask: &'a str) -> &'a str {
        if i == first {
            mask
        } else {
            t.token.text()
        }
    }
    let original: Vec<&str> = tagged.iter().enumerate().map(|(i, t)| word(i, t, first, mask_token)).collect();
    let corrupted: Vec<&str> = tagged
        .iter()
        .enumerate()
        .filter(|(i, t)| *i == first || t.upos != target)
        .map(|(i, t)| word(i, t, first, mask_token))
        .collect();
    Ok(Some(ClozeQueryPair {
        masked_original: detokenize(&original),
        masked_corrupted: detokenize(&corrupted),
        removed_token: tagged[first].token.text().to_string(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::RuleTagger;
    use crate::dataset::Split;

    fn tagger() -> RuleTagger {
        RuleTagger::bundled()
    }

    #[test]
    fn corrupt_text_fixtures() {
        let t = tagger();
        assert_eq!(
            corrupt_text(
                "Easynews Inc. said Monday that it was cooperating with the FBI in trying to locate the person who uploaded the virus to a Usenet news group hosted by the ISP.",
                WordClass::Noun,
                &t
            )
            .unwrap(),
            "said that it was cooperating with the in trying to locate the who uploaded the to a hosted by the."
        );
        assert_eq!(
            corrupt_text("An unclassifiably awful study in self - and audience-abuse.", WordClass::Adj, &t).unwrap(),
            "An unclassifiably study in self - and audience-abuse."
        );
        assert_eq!(
            corrupt_text("said that it was cooperating", WordClass::Noun, &t).unwrap(),
            "said that it was cooperating"
        );
    }

    #[test]
    fn all_target_sentence_becomes_empty() {
        assert_eq!(corrupt_text("cats dogs", WordClass::Noun, &tagger()).unwrap(), "");
    }

    #[test]
    fn record_keeps_label_and_id() {
        let schema = Task::Mrpc.schema();
        let r = Record::new()
            .with("idx", 7)
            .with("sentence1", "The cat saw the dog.")
            .with("sentence2", "A dog saw it.")
            .with("label", 1);
        let c = corrupt_record(&r, &schema, WordClass::Noun, &tagger()).unwrap();
        assert_eq!(c.text("sentence1"), Some("The saw the."));
        assert_eq!(c.text("sentence2"), Some("A saw it."));
        assert_eq!(c.get("label"), r.get("label"));
        assert_eq!(c.get("idx"), r.get("idx"));
    }

    #[test]
    fn single_field_and_identity() {
        let schema = Task::Cola.schema();
        let r = Record::new().with("sentence", "The cat sat.").with("label", 1);
        let c = corrupt_record(&r, &schema, WordClass::Det, &tagger()).unwrap();
        assert_eq!(c.text("sentence"), Some("cat sat."));
        let same = Record::new().with("sentence", "said that it was").with("label", 0);
        assert_eq!(corrupt_record(&same, &schema, WordClass::Noun, &tagger()).unwrap(), same);
    }

    #[test]
    fn schema_mismatch_reports_index() {
        let schema = Task::Rte.schema();
        let good = Record::new().with("sentence1", "a").with("sentence2", "b").with("label", 0);
        let bad = Record::new().with("sentence1", "a").with("label", 0);
        let recs = vec![good.clone(), good, bad];
        for exec in [Execution::Sequential, Execution::Parallel] {
            match corrupt_records(&recs, &schema, WordClass::Noun, &tagger(), exec) {
                Err(CorruptionError::SchemaMismatch { record, field }) => {
                    assert_eq!(record, 2);
                    assert_eq!(field, "sentence2");
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn split_fixture() {
        let ds = DatasetSplit::new(
            Task::Sst2,
            Split::Train,
            vec![
                Record::new().with("sentence", "the cat saw the dog").with("label", 0),
                Record::new().with("sentence", "It proves quite compelling.").with("label", 1),
                Record::new().with("sentence", "films").with("label", 1),
            ],
        );
        let c = corrupt_split(&ds, WordClass::Noun, &tagger()).unwrap();
        let texts: Vec<_> = c.records.iter().map(|r| r.text("sentence").unwrap()).collect();
        assert_eq!(texts, vec!["the saw the", "It proves quite compelling.", ""]);
        assert_eq!(c.provenance, Some(WordClass::Noun));
        assert_eq!(c.len(), 3);

        let empty = DatasetSplit::new(Task::Sst2, Split::Dev, vec![]);
        assert!(corrupt_split(&empty, WordClass::Noun, &tagger()).unwrap().is_empty());
    }

    #[test]
    fn recorrupting_with_cached_tags_is_identity() {
        let text = "The FBI found the virus on a server.";
        let tagged = annotation::annotate(text, &tagger()).unwrap();
        let once = remove_class(&tagged, WordClass::Noun);
        let twice = remove_class(&once, WordClass::Noun);
        assert_eq!(once, twice);
        assert_eq!(render(&twice), corrupt_text(text, WordClass::Noun, &tagger()).unwrap());
    }

    #[test]
    fn config_matrix() {
        let all_tasks: BTreeSet<_> = Task::ALL.into_iter().collect();
        let all_classes: BTreeSet<_> = WordClass::ALL.into_iter().collect();
        let all_settings: BTreeSet<_> = CorruptionSetting::ALL.into_iter().collect();
        let cfgs = enumerate_configs(&all_tasks, &all_classes, &all_settings).unwrap();
        assert_eq!(cfgs.len(), 192);
        let unique: BTreeSet<_> = cfgs.iter().map(|c| (c.task, c.corruption)).collect();
        assert_eq!(unique.len(), 192);
        assert_eq!(cfgs[0].task, Task::Cola);
        assert_eq!(cfgs[1].corruption, Some(CorruptionSpec::new(WordClass::Adj, CorruptionSetting::CorruptTest)));
        assert_eq!(cfgs[191].task, Task::StsB);

        assert_eq!(
            enumerate_configs(
                &BTreeSet::from([Task::Rte]),
                &BTreeSet::from([WordClass::Num]),
                &BTreeSet::from([CorruptionSetting::CorruptTest])
            )
            .unwrap()
            .len(),
            1
        );
        let two_tasks = BTreeSet::from([Task::Rte, Task::Qqp]);
        let two_classes = BTreeSet::from([WordClass::Noun, WordClass::Verb]);
        assert_eq!(enumerate_configs(&two_tasks, &two_classes, &all_settings).unwrap().len(), 12);
        assert!(matches!(
            enumerate_configs(&BTreeSet::new(), &two_classes, &all_settings),
            Err(CorruptionError::EmptyAxis("task"))
        ));
        assert!(enumerate_configs(&two_tasks, &BTreeSet::new(), &all_settings).is_err());
        assert!(enumerate_configs(&two_tasks, &two_classes, &BTreeSet::new()).is_err());
    }

    #[test]
    fn cloze_fixtures() {
        let t = tagger();
        let p = make_cloze_pair(
            "An unclassifiably awful study in self - and audience-abuse.",
            WordClass::Noun,
            &t,
            "[MASK]",
        )
        .unwrap()
        .unwrap();
        assert_eq!(p.masked_original, "An unclassifiably awful [MASK] in self - and audience-abuse.");
        assert_eq!(p.masked_corrupted, "An unclassifiably awful [MASK] in - and.");
        assert_eq!(p.removed_token, "study");

        assert_eq!(make_cloze_pair("said that it was", WordClass::Noun, &t, "[MASK]").unwrap(), None);

        let p = make_cloze_pair("the cat saw the dog", WordClass::Noun, &t, "[MASK]").unwrap().unwrap();
        assert_eq!(p.masked_original, "the [MASK] saw the dog");
        assert_eq!(p.masked_corrupted, "the [MASK] saw the");
        assert_eq!(p.removed_token, "cat");
    }

    #[test]
    fn cloze_errors() {
        let t = tagger();
        assert!(matches!(make_cloze_pair("a cat", WordClass::Noun, &t, ""), Err(CorruptionError::EmptyMask)));
        assert!(matches!(
            make_cloze_pair("a [MASK] cat", WordClass::Noun, &t, "[MASK]"),
            Err(CorruptionError::MaskInText(_))
        ));
    }

    #[test]
    fn names_parse() {
        assert_eq!("NOUN".parse::<WordClass>().unwrap(), WordClass::Noun);
        assert!("punct".parse::<WordClass>().is_err());
        assert_eq!(
            "corrupt_train_and_test".parse::<CorruptionSetting>().unwrap(),
            CorruptionSetting::CorruptTrainAndTest
        );
        assert_eq!(CorruptionSpec::new(WordClass::Verb, CorruptionSetting::CorruptTest).label(Task::Qnli), "qnli-verb");
        assert_eq!(WordClass::from_upos(Upos::Punct), None);
    }
}
