//! Task registry, records and dataset splits for the eight GLUE tasks in scope.

mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corruption::WordClass;
use crate::harness::Metric;

pub use io::{
    find_split_file, load_split, load_split_with, manifest_path, read_manifest, save_split, split_dir, FieldMapping,
    Manifest,
};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("unknown task {0:?}")]
    UnknownTask(String),
    #[error("unknown split {0:?}")]
    UnknownSplit(String),
    #[error("line {line}: missing field {field:?}")]
    MissingField { field: String, line: usize },
    #[error("line {line}: label {value} out of range for {kind}")]
    LabelOutOfRange { value: String, kind: LabelKind, line: usize },
    #[error("record {record}: {detail}")]
    InvalidRecord { record: usize, detail: String },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("no {split} split for {task} under {dir}")]
    DataMissing { task: String, split: String, dir: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// The GLUE tasks in scope. WNLI is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Task {
    Cola,
    MnliM,
    Mrpc,
    Qnli,
    Qqp,
    Rte,
    Sst2,
    StsB,
}

impl Task {
    pub const ALL: [Task; 8] =
        [Task::Cola, Task::MnliM, Task::Mrpc, Task::Qnli, Task::Qqp, Task::Rte, Task::Sst2, Task::StsB];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Cola => "cola",
            Task::MnliM => "mnli-m",
            Task::Mrpc => "mrpc",
            Task::Qnli => "qnli",
            Task::Qqp => "qqp",
            Task::Rte => "rte",
            Task::Sst2 => "sst-2",
            Task::StsB => "sts-b",
        }
    }

    pub fn schema(self) -> TaskSchema {
        TaskSchema::for_task(self)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.trim().to_lowercase().chars().filter(|c| *c != '-' && *c != '_').collect();
        Ok(match norm.as_str() {
            "cola" => Task::Cola,
            "mnlim" | "mnli" => Task::MnliM,
            "mrpc" => Task::Mrpc,
            "qnli" => Task::Qnli,
            "qqp" => Task::Qqp,
            "rte" => Task::Rte,
            "sst2" => Task::Sst2,
            "stsb" => Task::StsB,
            _ => return Err(DatasetError::UnknownTask(s.to_string())),
        })
    }
}

impl TryFrom<String> for Task {
    type Error = DatasetError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Task> for String {
    fn from(t: Task) -> String {
        t.as_str().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelKind {
    Binary,
    Multiclass3,
    #[serde(rename = "REGRESSION_0_5")]
    Regression0To5,
}

impl LabelKind {
    /// Whether a label value is legal for this kind.
    pub fn accepts(self, v: f64) -> bool {
        match self {
            LabelKind::Binary => v == 0.0 || v == 1.0,
            LabelKind::Multiclass3 => v == 0.0 || v == 1.0 || v == 2.0,
            LabelKind::Regression0To5 => (0.0..=5.0).contains(&v),
        }
    }

    pub fn is_classification(self) -> bool {
        !matches!(self, LabelKind::Regression0To5)
    }

    pub fn num_classes(self) -> usize {
        match self {
            LabelKind::Binary => 2,
            LabelKind::Multiclass3 => 3,
            LabelKind::Regression0To5 => 0,
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelKind::Binary => "BINARY",
            LabelKind::Multiclass3 => "MULTICLASS_3",
            LabelKind::Regression0To5 => "REGRESSION_0_5",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    DevMatched,
    DevMismatched,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::DevMatched => "dev_matched",
            Split::DevMismatched => "dev_mismatched",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_lowercase().replace('-', "_").as_str() {
            "train" => Split::Train,
            "dev" | "validation" => Split::Dev,
            "dev_matched" | "validation_matched" => Split::DevMatched,
            "dev_mismatched" | "validation_mismatched" => Split::DevMismatched,
            _ => return Err(DatasetError::UnknownSplit(s.to_string())),
        })
    }
}

/// Field layout, label kind, metric and evaluation split of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskSchema {
    pub task: Task,
    pub text_fields: Vec<&'static str>,
    pub label_field: &'static str,
    pub id_field: &'static str,
    pub label_kind: LabelKind,
    pub metric: Metric,
    pub eval_split: Split,
}

impl TaskSchema {
    pub fn for_task(task: Task) -> Self {
        let (text_fields, label_kind, metric, eval_split) = match task {
            Task::Cola => (vec!["sentence"], LabelKind::Binary, Metric::Matthews, Split::Dev),
            Task::Sst2 => (vec!["sentence"], LabelKind::Binary, Metric::Accuracy, Split::Dev),
            Task::Mrpc | Task::Rte => (vec!["sentence1", "sentence2"], LabelKind::Binary, Metric::Accuracy, Split::Dev),
            Task::Qqp => (vec!["question1", "question2"], LabelKind::Binary, Metric::Accuracy, Split::Dev),
            Task::Qnli => (vec!["question", "sentence"], LabelKind::Binary, Metric::Accuracy, Split::Dev),
            Task::MnliM => (vec!["premise", "hypothesis"], LabelKind::Multiclass3, Metric::Accuracy, Split::DevMatched),
            Task::StsB => (vec!["sentence1", "sentence2"], LabelKind::Regression0To5, Metric::Pearson, Split::Dev),
        };
        TaskSchema { task, text_fields, label_field: "label", id_field: "idx", label_kind, metric, eval_split }
    }

    /// Canonical field order used when writing records.
    pub fn field_order(&self) -> Vec<&'static str> {
        let mut v = vec![self.id_field];
        v.extend(&self.text_fields);
        v.push(self.label_field);
        v
    }
}

/// All tasks in scope, keyed by name.
pub fn task_registry() -> BTreeMap<&'static str, TaskSchema> {
    Task::ALL.iter().map(|t| (t.as_str(), TaskSchema::for_task(*t))).collect()
}

/// One dataset record: field name to JSON value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Record(pub Map<String, Value>);

impl Record {
    pub fn new() -> Self {
        Record(Map::new())
    }

    pub fn with(mut self, field: &str, value: impl Into<Value>) -> Self {
        self.0.insert(field.to_string(), value.into());
        self
    }

    pub fn get(&self, field: &str) -> Option<&Value> {
        self.0.get(field)
    }

    pub fn text(&self, field: &str) -> Option<&str> {
        self.0.get(field).and_then(Value::as_str)
    }

    pub fn set(&mut self, field: &str, value: impl Into<Value>) {
        self.0.insert(field.to_string(), value.into());
    }

    /// Numeric label, if present.
    pub fn label(&self, schema: &TaskSchema) -> Option<f64> {
        self.0.get(schema.label_field).and_then(Value::as_f64)
    }

    /// Reorders fields as id, texts, label, then anything else.
    pub fn canonicalized(&self, schema: &TaskSchema) -> Record {
        let mut out = Map::new();
        for f in schema.field_order() {
            if let Some(v) = self.0.get(f) {
                out.insert(f.to_string(), v.clone());
            }
        }
        for (k, v) in &self.0 {
            if !out.contains_key(k) {
                out.insert(k.clone(), v.clone());
            }
        }
        Record(out)
    }

    /// Checks that all schema fields are present and the label is in range.
    pub fn validate(&self, schema: &TaskSchema) -> Result<(), String> {
        for f in &schema.text_fields {
            match self.0.get(*f) {
                Some(Value::String(_)) => {}
                Some(other) => return Err(format!("field {f:?} is not text: {other}")),
                None => return Err(format!("missing field {f:?}")),
            }
        }
        let label = self.0.get(schema.label_field).ok_or_else(|| format!("missing field {:?}", schema.label_field))?;
        let v = label.as_f64().ok_or_else(|| format!("label {label} is not numeric"))?;
        if !schema.label_kind.accepts(v) {
            return Err(format!("label {v} out of range for {}", schema.label_kind));
        }
        Ok(())
    }
}

/// An ordered set of records for one task and split.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub task: Task,
    pub split: Split,
    pub records: Vec<Record>,
    /// Word class removed from this split, if any.
    pub provenance: Option<WordClass>,
}

impl DatasetSplit {
    pub fn new(task: Task, split: Split, records: Vec<Record>) -> Self {
        DatasetSplit { task, split, records, provenance: None }
    }

    pub fn schema(&self) -> TaskSchema {
        self.task.schema()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let schema = self.schema();
        for (i, r) in self.records.iter().enumerate() {
            r.validate(&schema).map_err(|detail| DatasetError::InvalidRecord { record: i, detail })?;
        }
        Ok(())
    }

    /// Gold labels in record order.
    pub fn labels(&self) -> Vec<f64> {
        let schema = self.schema();
        self.records.iter().map(|r| r.label(&schema).unwrap_or(f64::NAN)).collect()
    }

    /// Name of the directory this split lives in: `task` or `task-class`.
    pub fn dataset_label(&self) -> String {
        match self.provenance {
            None => self.task.to_string(),
            Some(c) => format!("{}-{}", self.task, c.as_lower()),
        }
    }
}
