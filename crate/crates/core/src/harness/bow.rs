//! Deterministic bag-of-words linear backend for desk-scale runs.
//!
//! Features are lowercased unigrams (and optionally bigrams) per text field,
//! plus `both:` features for words shared by the two fields of pair tasks.
//! Classification uses softmax regression, STS-B a linear regressor on the
//! label scaled to [0, 1]; both are trained with minibatch AdaGrad.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::backend::{BackendError, FittedModel, TrainerBackend};
use super::Hyperparams;
use crate::annotation::tokenize;
use crate::dataset::{DatasetSplit, LabelKind, Record, TaskSchema};
use crate::par::{self, Execution};

#[derive(Debug, Clone, PartialEq)]
pub struct BowConfig {
    /// AdaGrad step size; the transformer learning rate in
    /// [`Hyperparams`] does not transfer to this model.
    pub learning_rate: f64,
    pub l2: f64,
    pub bigrams: bool,
    pub execution: Execution,
}

impl Default for BowConfig {
    fn default() -> Self {
        BowConfig { learning_rate: 0.5, l2: 1e-6, bigrams: true, execution: Execution::default() }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BowBackend {
    config: BowConfig,
}

impl BowBackend {
    pub const ID: &'static str = "bow";

    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_config(config: BowConfig) -> Self {
        BowBackend { config }
    }
}

fn feature_names(record: &Record, schema: &TaskSchema, bigrams: bool) -> Vec<String> {
    let mut out = vec!["<bias>".to_string()];
    let mut per_field: Vec<Vec<String>> = Vec::new();
    for (j, field) in schema.text_fields.iter().enumerate() {
        let words: Vec<String> =
            tokenize(record.text(field).unwrap_or("")).iter().map(|t| t.text().to_lowercase()).collect();
        out.extend(words.iter().map(|w| format!("{j}:{w}")));
        if bigrams {
            out.extend(words.windows(2).map(|p| format!("{j}:{}_{}", p[0], p[1])));
        }
        per_field.push(words);
    }
    if let [a, b] = per_field.as_slice() {
        let mut shared: Vec<&String> = a.iter().filter(|w| b.contains(w)).collect();
        shared.sort();
        shared.dedup();
        let overlap = shared.len() as f64 / a.len().max(b.len()).max(1) as f64;
        out.extend(shared.iter().map(|w| format!("both:{w}")));
        out.push(format!("overlap:{}", (overlap * 4.0).round() as u32));
    }
    out
}

/// Sparse, L2-normalised feature vector.
fn vectorize(names: &[String], vocab: &HashMap<String, usize>) -> Vec<(usize, f64)> {
    let mut counts: Vec<(usize, f64)> = Vec::new();
    for n in names {
        if let Some(&i) = vocab.get(n) {
            match counts.iter_mut().find(|(j, _)| *j == i) {
                Some((_, c)) => *c += 1.0,
                None => counts.push((i, 1.0)),
            }
        }
    }
    let norm = counts.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, c) in &mut counts {
            *c /= norm;
        }
    }
    counts
}

struct BowModel {
    schema: TaskSchema,
    vocab: HashMap<String, usize>,
    outputs: usize,
    /// Row-major `[feature][output]`.
    weights: Vec<f64>,
    bigrams: bool,
    execution: Execution,
}

impl BowModel {
    fn scores(&self, x: &[(usize, f64)]) -> Vec<f64> {
        let mut s = vec![0.0; self.outputs];
        for &(f, v) in x {
            let row = &self.weights[f * self.outputs..(f + 1) * self.outputs];
            for (o, w) in s.iter_mut().zip(row) {
                *o += v * w;
            }
        }
        s
    }

    fn predict_one(&self, record: &Record) -> f64 {
        let x = vectorize(&feature_names(record, &self.schema, self.bigrams), &self.vocab);
        let s = self.scores(&x);
        match self.schema.label_kind {
            LabelKind::Regression0To5 => (s[0] * 5.0).clamp(0.0, 5.0),
            _ => argmax(&s) as f64,
        }
    }
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    best
}

fn softmax(s: &mut [f64]) {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in s.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in s.iter_mut() {
        *v /= z;
    }
}

impl TrainerBackend for BowBackend {
    fn id(&self) -> &str {
        Self::ID
    }

    fn fit(&self, train: &DatasetSplit, hp: &Hyperparams) -> Result<Box<dyn FittedModel>, BackendError> {
        if train.is_empty() {
            return Err(BackendError::Failed("empty training split".into()));
        }
        let schema = train.schema();
        let cfg = &self.config;
        let names = par::map(&train.records, cfg.execution, |_, r| feature_names(r, &schema, cfg.bigrams));
        let mut vocab: HashMap<String, usize> = HashMap::new();
        for n in names.iter().flatten() {
            let next = vocab.len();
            vocab.entry(n.clone()).or_insert(next);
        }
        let xs: Vec<Vec<(usize, f64)>> = names.iter().map(|n| vectorize(n, &vocab)).collect();
        let labels = train.labels();
        if let Some(i) = labels.iter().position(|y| !y.is_finite()) {
            return Err(BackendError::Failed(format!("record {i} has no label")));
        }
        let regression = schema.label_kind == LabelKind::Regression0To5;
        let outputs = if regression { 1 } else { schema.label_kind.num_classes() };

        let mut model = BowModel {
            schema: schema.clone(),
            vocab,
            outputs,
            weights: vec![0.0; 0],
            bigrams: cfg.bigrams,
            execution: cfg.execution,
        };
        model.weights = vec![0.0; model.vocab.len() * outputs];
        let mut accum = vec![1e-8; model.weights.len()];
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let batch = hp.batch_size.max(1) as usize;

        for _ in 0..hp.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let mut grad: HashMap<usize, f64> = HashMap::new();
                for &i in chunk {
                    let x = &xs[i];
                    let mut s = model.scores(x);
                    let err: Vec<f64> = if regression {
                        vec![s[0] - labels[i] / 5.0]
                    } else {
                        softmax(&mut s);
                        let y = labels[i] as usize;
                        s.iter().enumerate().map(|(c, p)| p - if c == y { 1.0 } else { 0.0 }).collect()
                    };
                    for &(f, v) in x {
                        for (o, e) in err.iter().enumerate() {
                            *grad.entry(f * outputs + o).or_insert(0.0) += v * e / chunk.len() as f64;
                        }
                    }
                }
                let mut keys: Vec<usize> = grad.keys().copied().collect();
                keys.sort_unstable();
                for k in keys {
                    let g = grad[&k] + cfg.l2 * model.weights[k];
                    accum[k] += g * g;
                    model.weights[k] -= cfg.learning_rate * g / accum[k].sqrt();
                }
            }
        }
        Ok(Box::new(model))
    }
}

impl FittedModel for BowModel {
    fn predict(&self, eval: &DatasetSplit) -> Result<Vec<f64>, BackendError> {
        Ok(par::map(&eval.records, self.execution, |_, r| self.predict_one(r)))
    }
}
