//! Task metrics on a percent scale.
//!
//! Degenerate denominators (a single predicted or gold class for Matthews,
//! zero variance for Pearson) yield 0 rather than an error.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Accuracy,
    Matthews,
    Pearson,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Matthews => "matthews",
            Metric::Pearson => "pearson",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Matthews => "Matthews correlation",
            Metric::Pearson => "Pearson correlation",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = MetricError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "accuracy" | "acc" => Ok(Metric::Accuracy),
            "matthews" | "mcc" => Ok(Metric::Matthews),
            "pearson" => Ok(Metric::Pearson),
            _ => Err(MetricError::Unknown(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{predictions} predictions for {golds} gold labels")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("no predictions to score")]
    EmptyInput,
    #[error("Matthews correlation needs 0/1 labels, got {0}")]
    NonBinary(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("unknown metric {0:?}")]
    Unknown(String),
}

/// Binary confusion counts with 1 as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn from_labels(predictions: &[f64], golds: &[f64]) -> Result<Self, MetricError> {
        let mut c = Confusion::default();
        for (&p, &g) in predictions.iter().zip(golds) {
            for v in [p, g] {
                if v != 0.0 && v != 1.0 {
                    return Err(MetricError::NonBinary(v));
                }
            }
            match (p == 1.0, g == 1.0) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    /// Matthews correlation in [-1, 1]; 0 when any margin is empty.
    pub fn mcc(&self) -> f64 {
        let (tp, tn, fp, fn_) = (self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64);
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / denom
        }
    }
}

fn accuracy(predictions: &[f64], golds: &[f64]) -> f64 {
    let hits = predictions.iter().zip(golds).filter(|(p, g)| p == g).count();
    hits as f64 / predictions.len() as f64
}

/// Sample Pearson correlation, two-pass; 0 when either side is constant.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Scores `predictions` against `golds` on a 0-100 (or -100..100) scale.
pub fn compute_metric(predictions: &[f64], golds: &[f64], metric: Metric) -> Result<f64, MetricError> {
    if predictions.len() != golds.len() {
        return Err(MetricError::LengthMismatch { predictions: predictions.len(), golds: golds.len() });
    }
    if predictions.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if let Some(&bad) = predictions.iter().chain(golds).find(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite(bad));
    }
    let raw = match metric {
        Metric::Accuracy => accuracy(predictions, golds),
        Metric::Matthews => Confusion::from_labels(predictions, golds)?.mcc(),
        Metric::Pearson => pearson(predictions, golds),
    };
    Ok(100.0 * raw)
}

/// Difference to the baseline, in metric points.
pub fn compute_delta(score: f64, baseline: f64) -> f64 {
    score - baseline
}
