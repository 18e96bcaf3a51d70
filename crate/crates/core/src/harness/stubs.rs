//! Test doubles for the backend contract.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::backend::{BackendError, FittedModel, TrainerBackend};
use super::Hyperparams;
use crate::corruption::WordClass;
use crate::dataset::DatasetSplit;

/// Always predicts the same value.
#[derive(Debug, Clone)]
pub struct ConstantBackend {
    id: String,
    value: f64,
    fits: Arc<AtomicUsize>,
}

impl ConstantBackend {
    pub fn new(value: f64) -> Self {
        ConstantBackend { id: format!("constant-{value}"), value, fits: Arc::new(AtomicUsize::new(0)) }
    }

    /// Number of `fit` calls so far.
    pub fn fit_count(&self) -> usize {
        self.fits.load(Ordering::SeqCst)
    }
}

struct Constant(f64);

impl FittedModel for Constant {
    fn predict(&self, eval: &DatasetSplit) -> Result<Vec<f64>, BackendError> {
        Ok(vec![self.0; eval.len()])
    }
}

impl TrainerBackend for ConstantBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn fit(&self, _train: &DatasetSplit, _hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError> {
        self.fits.fetch_add(1, Ordering::SeqCst);
        Ok(Box::new(Constant(self.value)))
    }
}

/// What one fit/predict cycle received.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub train_provenance: Option<WordClass>,
    pub eval_provenance: Option<WordClass>,
    pub train_texts: Vec<String>,
    pub eval_texts: Vec<String>,
}

fn first_field_texts(split: &DatasetSplit) -> Vec<String> {
    let schema = split.schema();
    split.records.iter().map(|r| r.text(schema.text_fields[0]).unwrap_or_default().to_string()).collect()
}

/// Predicts class 0 and records the splits it was handed.
#[derive(Debug, Clone, Default)]
pub struct RecordingBackend {
    observations: Arc<Mutex<Vec<Observation>>>,
}

impl RecordingBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.observations.lock().unwrap().clone()
    }
}

struct Recorder {
    train_provenance: Option<WordClass>,
    train_texts: Vec<String>,
    sink: Arc<Mutex<Vec<Observation>>>,
}

impl FittedModel for Recorder {
    fn predict(&self, eval: &DatasetSplit) -> Result<Vec<f64>, BackendError> {
        self.sink.lock().unwrap().push(Observation {
            train_provenance: self.train_provenance,
            eval_provenance: eval.provenance,
            train_texts: self.train_texts.clone(),
            eval_texts: first_field_texts(eval),
        });
        Ok(vec![0.0; eval.len()])
    }
}

impl TrainerBackend for RecordingBackend {
    fn id(&self) -> &str {
        "recording"
    }

    fn fit(&self, train: &DatasetSplit, _hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError> {
        Ok(Box::new(Recorder {
            train_provenance: train.provenance,
            train_texts: first_field_texts(train),
            sink: Arc::clone(&self.observations),
        }))
    }
}

/// Fails to train on splits stripped of one word class, until cleared.
#[derive(Debug, Clone, Default)]
pub struct FlakyBackend {
    fail_on: Arc<Mutex<Option<WordClass>>>,
    fits: Arc<AtomicUsize>,
}

impl FlakyBackend {
    pub fn failing_on(class: WordClass) -> Self {
        let b = Self::default();
        *b.fail_on.lock().unwrap() = Some(class);
        b
    }

    pub fn clear(&self) {
        *self.fail_on.lock().unwrap() = None;
    }

    pub fn fit_count(&self) -> usize {
        self.fits.load(Ordering::SeqCst)
    }
}

impl TrainerBackend for FlakyBackend {
    fn id(&self) -> &str {
        "flaky"
    }

    fn fit(&self, train: &DatasetSplit, _hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError> {
        self.fits.fetch_add(1, Ordering::SeqCst);
        let fail_on = *self.fail_on.lock().unwrap();
        if fail_on.is_some() && train.provenance == fail_on {
            return Err(BackendError::Failed("injected failure".into()));
        }
        Ok(Box::new(Constant(1.0)))
    }
}
