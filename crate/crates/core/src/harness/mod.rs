//! Experiment configuration, execution against a trainer backend, and the
//! resumable corruption matrix.

pub mod backend;
pub mod bow;
pub mod metrics;
pub mod store;
pub mod stubs;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub use backend::{BackendError, CommandBackend, FittedModel, TrainerBackend};
pub use bow::{BowBackend, BowConfig};
pub use metrics::{compute_delta, compute_metric, Metric, MetricError};
pub use store::{load_results, ResultsStore, RunKey, RunStatus, StoreError, StoredResult};

use crate::annotation::Tagger;
use crate::corruption::{corrupt_split_with, CorruptionError, CorruptionSetting, CorruptionSpec, WordClass};
use crate::dataset::{find_split_file, load_split, split_dir, DatasetError, DatasetSplit, Split, Task};
use crate::par::{self, Execution};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("data missing: {0}")]
    DataMissing(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error("backend failure ({backend}): {detail}")]
    BackendFailure { backend: String, detail: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn is_backend_failure(&self) -> bool {
        matches!(self, HarnessError::BackendFailure { .. })
    }
}

/// Fine-tuning protocol: batch size 32, learning rate 2e-5, three epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub epochs: u32,
    pub batch_size: u32,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams { epochs: 3, batch_size: 32, learning_rate: 2e-5, seed: 42 }
    }
}

/// One cell of the matrix; `corruption == None` is the baseline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub corruption: Option<CorruptionSpec>,
    pub hyperparams: Hyperparams,
}

impl ExperimentConfig {
    pub fn baseline(task: Task) -> Self {
        ExperimentConfig { task, corruption: None, hyperparams: Hyperparams::default() }
    }

    pub fn corrupted(task: Task, spec: CorruptionSpec) -> Self {
        ExperimentConfig { task, corruption: Some(spec), hyperparams: Hyperparams::default() }
    }

    pub fn with_hyperparams(mut self, hyperparams: Hyperparams) -> Self {
        self.hyperparams = hyperparams;
        self
    }

    pub fn is_baseline(&self) -> bool {
        self.corruption.is_none()
    }

    pub fn word_class(&self) -> Option<WordClass> {
        self.corruption.map(|c| c.word_class())
    }

    pub fn setting(&self) -> Option<CorruptionSetting> {
        self.corruption.map(|c| c.setting())
    }

    pub fn key(&self, backend: &str) -> RunKey {
        RunKey {
            task: self.task,
            word_class: self.word_class(),
            setting: self.setting(),
            backend: backend.to_string(),
            seed: self.hyperparams.seed,
        }
    }

    /// Filesystem-safe identifier such as `sst-2-noun-corrupt-test-s42`.
    pub fn run_id(&self, backend: &str) -> String {
        let cell = match self.corruption {
            None => "baseline".to_string(),
            Some(c) => format!("{}-{}", c.word_class().as_lower(), c.setting()),
        };
        let backend: String =
            backend.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        format!("{}-{cell}-{backend}-s{}", self.task, self.hyperparams.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub backend: String,
    pub metric: Metric,
    pub score: f64,
    pub baseline: Option<f64>,
    pub delta: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
    pub completed_at: DateTime<Utc>,
}

impl ExperimentResult {
    pub fn with_baseline(mut self, baseline: Option<f64>) -> Self {
        self.baseline = baseline;
        self.delta = baseline.map(|b| compute_delta(self.score, b));
        self
    }

    pub fn to_stored(&self) -> StoredResult {
        StoredResult {
            task: self.config.task,
            word_class: self.config.word_class(),
            setting: self.config.setting(),
            backend: self.backend.clone(),
            seed: self.config.hyperparams.seed,
            metric: self.metric,
            score: Some(self.score),
            baseline: self.baseline,
            delta: self.delta,
            wall_time: self.wall_time,
            timestamp: self.completed_at.to_rfc3339_opts(SecondsFormat::Millis, true),
            status: RunStatus::Ok,
            error: None,
        }
    }

    fn from_stored(config: &ExperimentConfig, s: &StoredResult) -> Option<Self> {
        Some(ExperimentResult {
            config: config.clone(),
            backend: s.backend.clone(),
            metric: s.metric,
            score: s.score?,
            baseline: s.baseline,
            delta: s.delta,
            wall_time: s.wall_time,
            completed_at: DateTime::parse_from_rfc3339(&s.timestamp).map(|t| t.with_timezone(&Utc)).unwrap_or_default(),
        })
    }
}

fn failed_row(config: &ExperimentConfig, backend: &str, wall_time: f64, err: &HarnessError) -> StoredResult {
    StoredResult {
        task: config.task,
        word_class: config.word_class(),
        setting: config.setting(),
        backend: backend.to_string(),
        seed: config.hyperparams.seed,
        metric: config.task.schema().metric,
        score: None,
        baseline: None,
        delta: None,
        wall_time,
        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        status: RunStatus::Failed,
        error: Some(err.to_string()),
    }
}

/// Outcome of [`Harness::run_matrix`].
#[derive(Debug, Default)]
pub struct MatrixOutcome {
    /// Successful results for the requested configs, in request order.
    pub results: Vec<ExperimentResult>,
    pub executed: usize,
    pub skipped: usize,
    pub failures: Vec<(ExperimentConfig, HarnessError)>,
}

type SplitKey = (Task, Split, Option<WordClass>);

/// Runs experiments for one backend and tagger over a data root.
///
/// Original splits live in `data_root/<task>/`; a pre-corrupted split in
/// `data_root/<task>-<class>/` is used when present, otherwise the original
/// is corrupted in memory.
pub struct Harness<'a> {
    data_root: PathBuf,
    backend: &'a dyn TrainerBackend,
    tagger: &'a dyn Tagger,
    work_root: Option<PathBuf>,
    execution: Execution,
    cache: Mutex<HashMap<SplitKey, Arc<DatasetSplit>>>,
}

impl<'a> Harness<'a> {
    pub fn new(data_root: impl Into<PathBuf>, backend: &'a dyn TrainerBackend, tagger: &'a dyn Tagger) -> Self {
        Harness {
            data_root: data_root.into(),
            backend,
            tagger,
            work_root: None,
            execution: Execution::default(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Directory receiving one sub-directory per run; defaults to `<data_root>/runs`.
    pub fn with_work_root(mut self, dir: impl Into<PathBuf>) -> Self {
        self.work_root = Some(dir.into());
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn work_root(&self) -> PathBuf {
        self.work_root.clone().unwrap_or_else(|| self.data_root.join("runs"))
    }

    fn original(&self, task: Task, split: Split) -> Result<DatasetSplit, HarnessError> {
        let dir = split_dir(&self.data_root, task, None);
        let path = find_split_file(&dir, split)
            .ok_or_else(|| HarnessError::DataMissing(format!("no {split} split for {task} in {}", dir.display())))?;
        Ok(load_split(task, split, path)?)
    }

    fn corrupted(&self, task: Task, split: Split, class: WordClass) -> Result<DatasetSplit, HarnessError> {
        let dir = split_dir(&self.data_root, task, Some(class));
        if let Some(path) = find_split_file(&dir, split) {
            let loaded = load_split(task, split, path)?;
            if loaded.provenance == Some(class) {
                return Ok(loaded);
            }
            log::warn!("{} lacks a {class} provenance manifest; corrupting in memory", dir.display());
        }
        let original = self.split(task, split, None)?;
        Ok(corrupt_split_with(&original, class, self.tagger, self.execution)?)
    }

    /// Loads (and caches) an original or corrupted split.
    pub fn split(&self, task: Task, split: Split, class: Option<WordClass>) -> Result<Arc<DatasetSplit>, HarnessError> {
        let key = (task, split, class);
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let loaded = Arc::new(match class {
            None => self.original(task, split)?,
            Some(c) => self.corrupted(task, split, c)?,
        });
        self.cache.lock().unwrap().insert(key, Arc::clone(&loaded));
        Ok(loaded)
    }

    fn backend_failure(&self, detail: impl ToString) -> HarnessError {
        HarnessError::BackendFailure { backend: self.backend.id().to_string(), detail: detail.to_string() }
    }

    fn check_predictions(&self, preds: &[f64], eval: &DatasetSplit) -> Result<(), HarnessError> {
        if preds.len() != eval.len() {
            return Err(self.backend_failure(format!("{} predictions for {} records", preds.len(), eval.len())));
        }
        let kind = eval.schema().label_kind;
        if let Some((i, p)) = preds.iter().enumerate().find(|(_, p)| !kind.accepts(**p)) {
            return Err(self.backend_failure(format!("prediction {i} = {p} is not a valid {kind} label")));
        }
        Ok(())
    }

    /// Trains and scores one config; no baseline is attached. The result is
    /// written to `<work_root>/<run id>/result.json` before returning.
    pub fn run_experiment(&self, config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
        let started = Instant::now();
        let schema = config.task.schema();
        let (train_class, eval_class) = match config.corruption {
            None => (None, None),
            Some(spec) => {
                let s = spec.setting();
                let c = spec.word_class();
                (s.corrupts_train().then_some(c), s.corrupts_eval().then_some(c))
            }
        };
        let train = self.split(config.task, Split::Train, train_class)?;
        let eval = self.split(config.task, schema.eval_split, eval_class)?;

        let model = self.backend.fit(&train, &config.hyperparams).map_err(|e| self.backend_failure(e))?;
        let preds = model.predict(&eval).map_err(|e| self.backend_failure(e))?;
        self.check_predictions(&preds, &eval)?;
        let score = compute_metric(&preds, &eval.labels(), schema.metric)?;

        let result = ExperimentResult {
            config: config.clone(),
            backend: self.backend.id().to_string(),
            metric: schema.metric,
            score,
            baseline: None,
            delta: None,
            wall_time: started.elapsed().as_secs_f64(),
            completed_at: Utc::now(),
        };
        self.persist(&result)?;
        Ok(result)
    }

    fn persist(&self, result: &ExperimentResult) -> Result<(), HarnessError> {
        let dir = self.work_root().join(result.config.run_id(&result.backend));
        fs::create_dir_all(&dir)?;
        let body = serde_json::to_vec_pretty(result).map_err(|e| HarnessError::Io(e.into()))?;
        fs::write(dir.join("result.json"), body)?;
        Ok(())
    }

    /// Runs every config not already completed in `store`, baselines first.
    ///
    /// Failed runs are recorded with `status: failed` and retried on the
    /// next call; only store I/O errors abort the matrix.
    pub fn run_matrix(
        &self,
        configs: &[ExperimentConfig],
        store: &ResultsStore,
    ) -> Result<MatrixOutcome, HarnessError> {
        let backend = self.backend.id().to_string();
        let existing = store::latest(&store.load()?);
        let done = |c: &ExperimentConfig| existing.get(&c.key(&backend)).is_some_and(StoredResult::is_ok);

        let mut seen = std::collections::HashSet::new();
        let unique: Vec<&ExperimentConfig> = configs.iter().filter(|c| seen.insert(c.key(&backend))).collect();
        let (baselines, corrupted): (Vec<&ExperimentConfig>, Vec<&ExperimentConfig>) =
            unique.iter().filter(|c| !done(c)).partition(|c| c.is_baseline());
        let skipped = unique.len() - baselines.len() - corrupted.len();

        let mut outcome = MatrixOutcome { skipped, ..MatrixOutcome::default() };
        let mut fresh: BTreeMap<RunKey, ExperimentResult> = BTreeMap::new();

        let base_runs = self.run_batch(&baselines, store, |_| None)?;
        for (cfg, r) in baselines.iter().zip(base_runs) {
            outcome.executed += 1;
            match r {
                Ok(res) => {
                    fresh.insert(cfg.key(&backend), res);
                }
                Err(e) => outcome.failures.push(((*cfg).clone(), e)),
            }
        }

        let baseline_score = |c: &ExperimentConfig| -> Option<f64> {
            let key = c.key(&backend).baseline_key();
            fresh.get(&key).map(|r| r.score).or_else(|| existing.get(&key).filter(|s| s.is_ok()).and_then(|s| s.score))
        };
        for c in &corrupted {
            if baseline_score(c).is_none() {
                log::warn!("no baseline for {}; its delta stays empty", c.run_id(&backend));
            }
        }
        let corrupt_runs = self.run_batch(&corrupted, store, baseline_score)?;
        for (cfg, r) in corrupted.iter().zip(corrupt_runs) {
            outcome.executed += 1;
            match r {
                Ok(res) => {
                    fresh.insert(cfg.key(&backend), res);
                }
                Err(e) => outcome.failures.push(((*cfg).clone(), e)),
            }
        }

        for cfg in unique {
            let key = cfg.key(&backend);
            let res = match fresh.remove(&key) {
                Some(r) => Some(r),
                None => existing.get(&key).filter(|s| s.is_ok()).and_then(|s| ExperimentResult::from_stored(cfg, s)),
            };
            outcome.results.extend(res);
        }
        Ok(outcome)
    }

    fn run_batch(
        &self,
        configs: &[&ExperimentConfig],
        store: &ResultsStore,
        baseline: impl Fn(&ExperimentConfig) -> Option<f64> + Sync,
    ) -> Result<Vec<Result<ExperimentResult, HarnessError>>, HarnessError> {
        par::try_map(configs, self.execution, |_, cfg| {
            let started = Instant::now();
            match self.run_experiment(cfg) {
                Ok(r) => {
                    let r = if cfg.is_baseline() { r } else { r.with_baseline(baseline(cfg)) };
                    store.append(&r.to_stored())?;
                    log::info!("{}: {:.2}", cfg.run_id(self.backend.id()), r.score);
                    Ok(Ok(r))
                }
                Err(e) => {
                    log::error!("{}: {e}", cfg.run_id(self.backend.id()));
                    let row = failed_row(cfg, self.backend.id(), started.elapsed().as_secs_f64(), &e);
                    store.append(&row)?;
                    Ok(Err(e))
                }
            }
        })
    }
}

/// Score of always predicting the most frequent training label (the mean
/// training label for regression tasks) on `eval`.
pub fn majority_class_score(train: &DatasetSplit, eval: &DatasetSplit) -> Result<f64, MetricError> {
    let schema = eval.schema();
    let labels = train.labels();
    let guess = if schema.label_kind.is_classification() {
        let mut counts = vec![0usize; schema.label_kind.num_classes()];
        for l in &labels {
            if let Some(c) = counts.get_mut(*l as usize) {
                *c += 1;
            }
        }
        // Ties go to the lowest class index.
        let best = counts.iter().enumerate().fold(0, |b, (i, c)| if *c > counts[b] { i } else { b });
        best as f64
    } else {
        labels.iter().sum::<f64>() / labels.len().max(1) as f64
    };
    compute_metric(&vec![guess; eval.len()], &eval.labels(), schema.metric)
}

/// Runs one config with default harness settings.
pub fn run_experiment(
    config: &ExperimentConfig,
    data_root: &Path,
    backend: &dyn TrainerBackend,
    tagger: &dyn Tagger,
) -> Result<ExperimentResult, HarnessError> {
    Harness::new(data_root, backend, tagger).run_experiment(config)
}

/// Runs a matrix against the store at `results_store`; run directories go
/// next to the store under `runs/`.
pub fn run_matrix(
    configs: &[ExperimentConfig],
    data_root: &Path,
    backend: &dyn TrainerBackend,
    tagger: &dyn Tagger,
    results_store: &Path,
) -> Result<MatrixOutcome, HarnessError> {
    let store = ResultsStore::open(results_store)?;
    let work = results_store.parent().unwrap_or(Path::new(".")).join("runs");
    Harness::new(data_root, backend, tagger).with_work_root(work).run_matrix(configs, &store)
}
