//! Trainer backend contract and the subprocess adapter.
//!
//! Subprocess protocol (`nludiag-backend/1`), all lines JSON on stdin:
//!
//! 1. a header object with `protocol`, `task`, `label_kind`, `text_fields`,
//!    `label_field`, `hyperparams`, `train_count` and `eval_count`;
//! 2. `train_count` training records in the dataset JSONL format;
//! 3. `eval_count` evaluation records with the label field removed.
//!
//! The process answers with `eval_count` lines on stdout, each a bare number
//! or an object with a `prediction` number, and exits with status 0.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde_json::{json, Value};

use super::Hyperparams;
use crate::dataset::DatasetSplit;

pub const PROTOCOL_VERSION: &str = "nludiag-backend/1";

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("{0}")]
    Failed(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A trainable model family.
pub trait TrainerBackend: Send + Sync {
    fn id(&self) -> &str;
    fn fit(&self, train: &DatasetSplit, hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError>;
}

/// A trained model. Predictions are class indices or real-valued scores,
/// one per evaluation record.
pub trait FittedModel: Send + Sync {
    fn predict(&self, eval: &DatasetSplit) -> Result<Vec<f64>, BackendError>;
}

/// Runs an external program per experiment, speaking the protocol above.
#[derive(Debug, Clone)]
pub struct CommandBackend {
    id: String,
    program: PathBuf,
    args: Vec<String>,
}

impl CommandBackend {
    /// The id is `cmd:` followed by the program and arguments, each path
    /// shortened to its file name.
    pub fn new(program: impl Into<PathBuf>, args: Vec<String>) -> Self {
        let program = program.into();
        let short = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
        let parts: Vec<String> = std::iter::once(short(&program).unwrap_or_default())
            .chain(args.iter().map(|a| short(Path::new(a)).unwrap_or_else(|| a.clone())))
            .collect();
        let id = format!("cmd:{}", parts.join(" "));
        CommandBackend { id, program, args }
    }

    /// Parses `program arg1 arg2` split on whitespace.
    pub fn from_command_line(line: &str) -> Result<Self, BackendError> {
        let mut parts = line.split_whitespace();
        let program = parts.next().ok_or_else(|| BackendError::Failed("empty backend command".into()))?;
        Ok(Self::new(program, parts.map(String::from).collect()))
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

impl TrainerBackend for CommandBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn fit(&self, train: &DatasetSplit, hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError> {
        Ok(Box::new(CommandModel { backend: self.clone(), train: train.clone(), hp: hp.clone() }))
    }
}

struct CommandModel {
    backend: CommandBackend,
    train: DatasetSplit,
    hp: Hyperparams,
}

impl CommandModel {
    fn request(&self, eval: &DatasetSplit) -> Result<Vec<u8>, BackendError> {
        let schema = self.train.schema();
        let header = json!({
            "protocol": PROTOCOL_VERSION,
            "task": schema.task,
            "label_kind": schema.label_kind.to_string(),
            "text_fields": schema.text_fields,
            "label_field": schema.label_field,
            "hyperparams": self.hp,
            "train_count": self.train.len(),
            "eval_count": eval.len(),
        });
        let to_io = |e: serde_json::Error| BackendError::Protocol(e.to_string());
        let mut buf = serde_json::to_vec(&header).map_err(to_io)?;
        buf.push(b'\n');
        for r in &self.train.records {
            serde_json::to_writer(&mut buf, &r.canonicalized(&schema)).map_err(to_io)?;
            buf.push(b'\n');
        }
        for r in &eval.records {
            let mut r = r.canonicalized(&schema);
            r.0.remove(schema.label_field);
            serde_json::to_writer(&mut buf, &r).map_err(to_io)?;
            buf.push(b'\n');
        }
        Ok(buf)
    }
}

fn parse_prediction(line: &str, n: usize) -> Result<f64, BackendError> {
    let bad = || BackendError::Protocol(format!("prediction line {n}: {line:?}"));
    match serde_json::from_str::<Value>(line.trim()).map_err(|_| bad())? {
        Value::Number(x) => x.as_f64().ok_or_else(bad),
        Value::Object(m) => m.get("prediction").and_then(Value::as_f64).ok_or_else(bad),
        _ => Err(bad()),
    }
}

impl FittedModel for CommandModel {
    fn predict(&self, eval: &DatasetSplit) -> Result<Vec<f64>, BackendError> {
        let input = self.request(eval)?;
        let mut child = Command::new(&self.backend.program)
            .args(&self.backend.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError::Failed(format!("cannot start {}: {e}", self.backend.program.display())))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            stdin.write_all(&input)?;
            stdin.flush()
        });
        let stdout = child.stdout.take().expect("piped stdout");
        let mut preds = Vec::with_capacity(eval.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            preds.push(parse_prediction(&line, i + 1)?);
        }
        let output = child.wait_with_output()?;
        let write_result = writer.join().map_err(|_| BackendError::Failed("stdin writer panicked".into()))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(BackendError::Failed(format!(
                "{} exited with {}: {}",
                self.backend.id,
                output.status,
                stderr.trim()
            )));
        }
        write_result?;
        if preds.len() != eval.len() {
            return Err(BackendError::Protocol(format!("expected {} predictions, got {}", eval.len(), preds.len())));
        }
        Ok(preds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Record, Split, Task};

    fn split(n: usize) -> DatasetSplit {
        let records = (0..n)
            .map(|i| {
                Record::new().with("idx", i as u64).with("sentence", format!("s {i}")).with("label", (i % 2) as u64)
            })
            .collect();
        DatasetSplit::new(Task::Sst2, Split::Train, records)
    }

    #[test]
    fn prediction_lines() {
        assert_eq!(parse_prediction("1", 1).unwrap(), 1.0);
        assert_eq!(parse_prediction("{\"prediction\": 2.5}", 1).unwrap(), 2.5);
        assert!(parse_prediction("\"x\"", 1).is_err());
    }

    #[test]
    fn request_strips_eval_labels() {
        let model =
            CommandModel { backend: CommandBackend::new("true", vec![]), train: split(2), hp: Hyperparams::default() };
        let body = String::from_utf8(model.request(&split(3)).unwrap()).unwrap();
        let lines: Vec<Value> = body.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0]["protocol"], PROTOCOL_VERSION);
        assert_eq!(lines[0]["train_count"], 2);
        assert_eq!(lines[0]["eval_count"], 3);
        assert!(lines[1].get("label").is_some());
        assert!(lines[3].get("label").is_none());
    }

    #[cfg(unix)]
    #[test]
    fn shell_backend_round_trip() {
        // Skips the header and two training lines, then answers 1 per eval line.
        let script = "read h; read a; read b; while read l; do echo 1; done";
        let backend = CommandBackend::new("sh", vec!["-c".into(), script.into()]);
        let model = backend.fit(&split(2), &Hyperparams::default()).unwrap();
        assert_eq!(model.predict(&split(3)).unwrap(), vec![1.0; 3]);

        let failing = CommandBackend::new("sh", vec!["-c".into(), "cat >/dev/null; echo boom >&2; exit 3".into()]);
        let model = failing.fit(&split(1), &Hyperparams::default()).unwrap();
        match model.predict(&split(1)) {
            Err(BackendError::Failed(msg)) => assert!(msg.contains("boom"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }
}
