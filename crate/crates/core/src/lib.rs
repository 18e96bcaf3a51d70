//! Word-class corruption diagnostics for NLU datasets.
//!
//! The pipeline: tag every sentence with universal part-of-speech classes
//! ([`annotation`]), strip one class from the training and/or evaluation
//! split ([`corruption`]), retrain and score over the full corruption matrix
//! ([`harness`]), then look at which lexical cues survive ([`cues`]) and
//! render tables and heatmaps ([`report`]).
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default) and fall back to plain iterators otherwise; see [`par`].

pub mod annotation;
pub mod corruption;
pub mod cues;
pub mod dataset;
pub mod harness;
pub mod par;
pub mod report;
pub mod synthetic;

pub use annotation::{RuleTagger, Tagger, Token, Upos};
pub use corruption::{CorruptionSetting, CorruptionSpec, WordClass};
pub use dataset::{DatasetSplit, Record, Split, Task, TaskSchema};
pub use harness::{ExperimentConfig, ExperimentResult, Hyperparams, Metric, TrainerBackend};
