use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::{DatasetError, DatasetSplit, LabelKind, Record, Split, Task, TaskSchema};
use crate::corruption::WordClass;

/// Maps upstream column names and label strings onto a task's schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMapping {
    /// Canonical field name to accepted source names, tried in order.
    pub aliases: BTreeMap<String, Vec<String>>,
    /// String label values to numeric labels.
    #[serde(default)]
    pub label_values: BTreeMap<String, f64>,
}

impl FieldMapping {
    pub fn default_for(task: Task) -> Self {
        let schema = task.schema();
        let mut aliases: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut add = |field: &str, names: &[&str]| {
            aliases.insert(field.to_string(), names.iter().map(|s| s.to_string()).collect());
        };
        add("idx", &["idx", "id", "index", "pairID"]);
        match task {
            Task::Cola | Task::Sst2 => add("sentence", &["sentence", "text"]),
            Task::Mrpc => {
                add("sentence1", &["sentence1", "#1 String"]);
                add("sentence2", &["sentence2", "#2 String"]);
            }
            Task::Rte | Task::StsB => {
                add("sentence1", &["sentence1"]);
                add("sentence2", &["sentence2"]);
            }
            Task::Qqp => {
                add("question1", &["question1"]);
                add("question2", &["question2"]);
            }
            Task::Qnli => {
                add("question", &["question"]);
                add("sentence", &["sentence"]);
            }
            Task::MnliM => {
                add("premise", &["premise", "sentence1"]);
                add("hypothesis", &["hypothesis", "sentence2"]);
            }
        }
        let label_names: &[&str] = match task {
            Task::Cola => &["label", "acceptability"],
            Task::Mrpc => &["label", "Quality"],
            Task::Qqp => &["label", "is_duplicate"],
            Task::MnliM => &["label", "gold_label"],
            Task::StsB => &["label", "score"],
            _ => &["label"],
        };
        add(schema.label_field, label_names);

        let mut label_values = BTreeMap::new();
        match task {
            Task::MnliM => {
                label_values.insert("entailment".into(), 0.0);
                label_values.insert("neutral".into(), 1.0);
                label_values.insert("contradiction".into(), 2.0);
            }
            Task::Qnli | Task::Rte => {
                label_values.insert("entailment".into(), 0.0);
                label_values.insert("not_entailment".into(), 1.0);
            }
            _ => {}
        }
        FieldMapping { aliases, label_values }
    }

    fn source_for<'a>(&'a self, field: &str, available: &dyn Fn(&str) -> bool) -> Option<&'a str> {
        self.aliases.get(field).and_then(|names| names.iter().find(|n| available(n))).map(String::as_str)
    }
}

/// Sidecar metadata written next to every saved split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub task: String,
    pub split: String,
    pub provenance: Option<String>,
    pub count: usize,
    /// SHA-256 of the JSONL file, hex encoded.
    pub checksum: String,
}

/// `train.jsonl` -> `train.manifest.json`.
pub fn manifest_path(data_path: &Path) -> PathBuf {
    let stem = data_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data_path.with_file_name(format!("{stem}.manifest.json"))
}

pub fn read_manifest(data_path: &Path) -> Result<Option<Manifest>, DatasetError> {
    let path = manifest_path(data_path);
    if !path.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_reader(BufReader::new(File::open(path)?))?))
}

/// `root/task` for originals, `root/task-class` for corrupted variants.
pub fn split_dir(root: &Path, task: Task, class: Option<WordClass>) -> PathBuf {
    match class {
        None => root.join(task.as_str()),
        Some(c) => root.join(format!("{}-{}", task, c.as_lower())),
    }
}

/// The JSONL or TSV file holding `split` in `dir`, JSONL preferred.
pub fn find_split_file(dir: &Path, split: Split) -> Option<PathBuf> {
    ["jsonl", "tsv"].iter().map(|ext| dir.join(format!("{}.{ext}", split.as_str()))).find(|p| p.is_file())
}

fn canonical_label(raw: &Value, kind: LabelKind, mapping: &FieldMapping, line: usize) -> Result<Value, DatasetError> {
    let numeric = match raw {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => mapping.label_values.get(s.trim()).copied().or_else(|| s.trim().parse::<f64>().ok()),
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        _ => None,
    };
    let out_of_range = || DatasetError::LabelOutOfRange { value: raw.to_string(), kind, line };
    let v = numeric.filter(|v| v.is_finite()).ok_or_else(out_of_range)?;
    if !kind.accepts(v) {
        return Err(out_of_range());
    }
    Ok(if kind.is_classification() { Value::from(v as u64) } else { Value::from(v) })
}

fn canonical_id(raw: &Value) -> Value {
    match raw {
        Value::String(s) => s.trim().parse::<u64>().map(Value::from).unwrap_or_else(|_| raw.clone()),
        other => other.clone(),
    }
}

/// Builds a schema record from a source row exposed through `lookup`.
fn build_record(
    schema: &TaskSchema,
    mapping: &FieldMapping,
    line: usize,
    has: &dyn Fn(&str) -> bool,
    lookup: &dyn Fn(&str) -> Option<Value>,
) -> Result<Record, DatasetError> {
    let mut out = Map::new();
    if let Some(src) = mapping.source_for(schema.id_field, has) {
        if let Some(v) = lookup(src).filter(|v| !v.is_null()) {
            out.insert(schema.id_field.to_string(), canonical_id(&v));
        }
    }
    for field in &schema.text_fields {
        let value = mapping
            .source_for(field, has)
            .and_then(lookup)
            .ok_or_else(|| DatasetError::MissingField { field: field.to_string(), line })?;
        let text = match value {
            Value::String(s) => s,
            Value::Null => return Err(DatasetError::MissingField { field: field.to_string(), line }),
            other => other.to_string(),
        };
        out.insert(field.to_string(), Value::String(text));
    }
    let raw = mapping
        .source_for(schema.label_field, has)
        .and_then(lookup)
        .ok_or_else(|| DatasetError::MissingField { field: schema.label_field.to_string(), line })?;
    out.insert(schema.label_field.to_string(), canonical_label(&raw, schema.label_kind, mapping, line)?);
    Ok(Record(out))
}

fn load_tsv(path: &Path, schema: &TaskSchema, mapping: &FieldMapping) -> Result<Vec<Record>, DatasetError> {
    let mut reader =
        csv::ReaderBuilder::new().delimiter(b'\t').quoting(false).flexible(true).has_headers(true).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        // Header is line 1.
        let line = i + 2;
        let has = |name: &str| headers.iter().any(|h| h == name);
        let lookup = |name: &str| {
            headers.iter().position(|h| h == name).and_then(|col| row.get(col)).map(|s| Value::String(s.to_string()))
        };
        records.push(build_record(schema, mapping, line, &has, &lookup)?);
    }
    Ok(records)
}

fn load_jsonl(path: &Path, schema: &TaskSchema, mapping: &FieldMapping) -> Result<Vec<Record>, DatasetError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Map<String, Value> =
            serde_json::from_str(&line).map_err(|e| DatasetError::Parse { line: line_no, detail: e.to_string() })?;
        let has = |name: &str| obj.contains_key(name);
        let lookup = |name: &str| obj.get(name).cloned();
        records.push(build_record(schema, mapping, line_no, &has, &lookup)?);
    }
    Ok(records)
}

/// Loads a TSV (header row) or JSONL split with the task's default field mapping.
pub fn load_split(task: Task, split: Split, path: impl AsRef<Path>) -> Result<DatasetSplit, DatasetError> {
    load_split_with(task, split, path, &FieldMapping::default_for(task))
}

pub fn load_split_with(
    task: Task,
    split: Split,
    path: impl AsRef<Path>,
    mapping: &FieldMapping,
) -> Result<DatasetSplit, DatasetError> {
    let path = path.as_ref();
    let schema = task.schema();
    let is_tsv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("txt"));
    let records = if is_tsv { load_tsv(path, &schema, mapping)? } else { load_jsonl(path, &schema, mapping)? };
    let provenance = match read_manifest(path)? {
        Some(Manifest { provenance: Some(p), .. }) => Some(p.parse().map_err(|_| DatasetError::Parse {
            line: 0,
            detail: format!("manifest provenance {p:?} is not a word class"),
        })?),
        _ => None,
    };
    Ok(DatasetSplit { task, split, records, provenance })
}

/// Writes the split as JSONL (schema field order) plus its manifest.
pub fn save_split(dataset: &DatasetSplit, path: impl AsRef<Path>) -> Result<Manifest, DatasetError> {
    let path = path.as_ref();
    dataset.validate()?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let schema = dataset.schema();
    let mut body = Vec::new();
    for r in &dataset.records {
        serde_json::to_writer(&mut body, &r.canonicalized(&schema))?;
        body.push(b'\n');
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&body)?;
    w.flush()?;

    let manifest = Manifest {
        task: dataset.task.to_string(),
        split: dataset.split.to_string(),
        provenance: dataset.provenance.map(|c| c.as_lower().to_string()),
        count: dataset.records.len(),
        checksum: hex::encode(Sha256::digest(&body)),
    };
    let mut mw = BufWriter::new(File::create(manifest_path(path))?);
    serde_json::to_writer_pretty(&mut mw, &manifest)?;
    mw.write_all(b"\n")?;
    mw.flush()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const MRPC_TSV: &str = "Quality\t#1 ID\t#2 ID\t#1 String\t#2 String\n\
1\t702876\t702977\tAmrozi accused his brother , whom he called \" the witness \" , of deliberately distorting his evidence .\tReferring to him as only \" the witness \" , Amrozi accused his brother of deliberately distorting his evidence .\n\
0\t2108705\t2108831\tYucaipa owned Dominick 's before selling the chain to Safeway in 1998 for $ 2.5 billion .\tYucaipa bought Dominick 's in 1995 for $ 693 million and sold it to Safeway for $ 1.8 billion in 1998 .\n\
1\t1330381\t1330521\tThey had published an advertisement on the Internet on June 10 , offering the cargo for sale , he added .\tOn June 10 , the ship 's owners had published an advertisement on the Internet , offering the explosives for sale .\n";

    #[test]
    fn glue_mrpc_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "dev.tsv", MRPC_TSV);
        let ds = load_split(Task::Mrpc, Split::Dev, &p).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.labels(), vec![1.0, 0.0, 1.0]);
        assert!(ds.records[1].text("sentence1").unwrap().starts_with("Yucaipa owned"));
        assert_eq!(ds.provenance, None);
    }

    #[test]
    fn sts_label_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "dev.tsv", "sentence1\tsentence2\tscore\na\tb\t3.2\nc\td\t7.2\n");
        match load_split(Task::StsB, Split::Dev, &p) {
            Err(DatasetError::LabelOutOfRange { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_field_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "train.jsonl",
            "{\"sentence1\":\"a\",\"sentence2\":\"b\",\"label\":1}\n{\"sentence1\":\"a\",\"label\":0}\n",
        );
        match load_split(Task::Rte, Split::Train, &p) {
            Err(DatasetError::MissingField { field, line }) => {
                assert_eq!(field, "sentence2");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn string_labels_map_through_table() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "dev_matched.tsv",
            "index\tsentence1\tsentence2\tgold_label\n0\tp\th\tneutral\n1\tp\th\tcontradiction\n",
        );
        let ds = load_split(Task::MnliM, Split::DevMatched, &p).unwrap();
        assert_eq!(ds.labels(), vec![1.0, 2.0]);
        assert_eq!(ds.records[1].get("idx"), Some(&Value::from(1u64)));
    }

    #[test]
    fn tsv_and_jsonl_agree() {
        let dir = tempfile::tempdir().unwrap();
        let tsv = write(dir.path(), "a.tsv", "sentence\tlabel\nit is good .\t1\nit is bad .\t0\nmeh\t0\n");
        let jsonl = write(
            dir.path(),
            "b.jsonl",
            "{\"sentence\":\"it is good .\",\"label\":1}\n{\"label\":0,\"sentence\":\"it is bad .\"}\n\n{\"sentence\":\"meh\",\"label\":0.0}\n",
        );
        let a = load_split(Task::Sst2, Split::Dev, &tsv).unwrap();
        let b = load_split(Task::Sst2, Split::Dev, &jsonl).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.records.iter().zip(&b.records) {
            for f in ["sentence", "label"] {
                assert_eq!(x.get(f), y.get(f));
            }
        }
    }

    #[test]
    fn save_writes_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = DatasetSplit::new(
            Task::Cola,
            Split::Train,
            vec![Record::new().with("sentence", "The cat sat.").with("label", 1)],
        );
        ds.provenance = Some(WordClass::Noun);
        let p = dir.path().join("cola-noun").join("train.jsonl");
        let m = save_split(&ds, &p).unwrap();
        assert_eq!(m.provenance.as_deref(), Some("noun"));
        assert_eq!(m.count, 1);
        assert_eq!(read_manifest(&p).unwrap().unwrap(), m);
        let body = std::fs::read(&p).unwrap();
        assert_eq!(m.checksum, hex::encode(Sha256::digest(&body)));
        assert_eq!(load_split(Task::Cola, Split::Train, &p).unwrap(), ds);
    }

    #[test]
    fn empty_split_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = DatasetSplit::new(Task::Qqp, Split::Dev, vec![]);
        let p = dir.path().join("dev.jsonl");
        let m = save_split(&ds, &p).unwrap();
        assert_eq!(m.count, 0);
        assert_eq!(std::fs::read(&p).unwrap().len(), 0);
        assert_eq!(load_split(Task::Qqp, Split::Dev, &p).unwrap(), ds);
    }

    #[test]
    fn layout_helpers() {
        let root = Path::new("/data");
        assert_eq!(split_dir(root, Task::Sst2, None), Path::new("/data/sst-2"));
        assert_eq!(split_dir(root, Task::Cola, Some(WordClass::Noun)), Path::new("/data/cola-noun"));
        assert_eq!(manifest_path(Path::new("/x/train.jsonl")), Path::new("/x/train.manifest.json"));
    }

    fn record_strategy(task: Task) -> impl Strategy<Value = Record> {
        let schema = task.schema();
        let n_text = schema.text_fields.len();
        (prop::collection::vec("\\PC{0,40}", n_text), 0u8..2, prop::option::of(0u64..100_000)).prop_map(
            move |(texts, label, idx)| {
                let mut r = Record::new();
                if let Some(i) = idx {
                    r.set("idx", i);
                }
                for (f, t) in schema.text_fields.iter().zip(texts) {
                    r.set(f, t);
                }
                r.set("label", label as u64);
                r
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn save_load_round_trip(
            records in prop::collection::vec(record_strategy(Task::Qnli), 0..12),
            corrupted in any::<bool>(),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let mut ds = DatasetSplit::new(Task::Qnli, Split::Dev, records);
            if corrupted {
                ds.provenance = Some(WordClass::Verb);
            }
            let p = dir.path().join("dev.jsonl");
            save_split(&ds, &p).unwrap();
            prop_assert_eq!(load_split(Task::Qnli, Split::Dev, &p).unwrap(), ds);
        }
    }
}
