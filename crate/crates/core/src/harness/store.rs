//! Append-only JSONL results store.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::Metric;
use crate::corruption::{CorruptionSetting, WordClass};
use crate::dataset::Task;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}:{line}: {detail}")]
    Malformed { path: String, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One line of the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredResult {
    pub task: Task,
    pub word_class: Option<WordClass>,
    pub setting: Option<CorruptionSetting>,
    pub backend: String,
    pub seed: u64,
    pub metric: Metric,
    pub score: Option<f64>,
    pub baseline: Option<f64>,
    pub delta: Option<f64>,
    pub wall_time: f64,
    pub timestamp: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl StoredResult {
    pub fn key(&self) -> RunKey {
        RunKey {
            task: self.task,
            word_class: self.word_class,
            setting: self.setting,
            backend: self.backend.clone(),
            seed: self.seed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok && self.score.is_some()
    }

    pub fn is_baseline(&self) -> bool {
        self.setting.is_none()
    }
}

/// Identity used for resumption: config, backend id and seed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunKey {
    pub task: Task,
    pub word_class: Option<WordClass>,
    pub setting: Option<CorruptionSetting>,
    pub backend: String,
    pub seed: u64,
}

impl RunKey {
    pub fn baseline_key(&self) -> RunKey {
        RunKey { word_class: None, setting: None, ..self.clone() }
    }
}

/// Keeps the last entry per key, in store order.
pub fn latest(results: &[StoredResult]) -> BTreeMap<RunKey, StoredResult> {
    let mut out = BTreeMap::new();
    for r in results {
        out.insert(r.key(), r.clone());
    }
    out
}

/// A results file. Appends are serialised through an internal lock; readers
/// may load concurrently and see whole lines only.
#[derive(Debug)]
pub struct ResultsStore {
    path: PathBuf,
    writer: Mutex<()>,
}

impl ResultsStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        Ok(ResultsStore { path, writer: Mutex::new(()) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn load(&self) -> Result<Vec<StoredResult>, StoreError> {
        load_results(&self.path)
    }

    pub fn append(&self, result: &StoredResult) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(result)?;
        line.push(b'\n');
        let _guard = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(&line)?;
        f.flush()?;
        Ok(())
    }
}

/// Reads every line of a store file; a missing file is an empty store.
pub fn load_results(path: &Path) -> Result<Vec<StoredResult>, StoreError> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
            path: path.display().to_string(),
            line: i + 1,
            detail: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}
