//! Baseline tables, per-class delta tables and heatmaps from a results store.

mod font;
mod heatmap;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

pub use heatmap::{diverging, HeatmapMatrix};

use crate::corruption::{CorruptionSetting, WordClass};
use crate::dataset::Task;
use crate::harness::{compute_delta, Metric, StoredResult};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no baseline results in the store")]
    NoBaselines,
    #[error("no results: {0}")]
    NoResults(String),
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Restricts a report to one backend and/or seed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportFilter {
    pub backend: Option<String>,
    pub seed: Option<u64>,
}

type Cell = (Task, Option<WordClass>, Option<CorruptionSetting>);

/// Last successful result per (task, class, setting), in store order.
fn select(results: &[StoredResult], filter: &ReportFilter) -> BTreeMap<Cell, StoredResult> {
    let mut out = BTreeMap::new();
    for r in results {
        if !r.is_ok()
            || filter.backend.as_deref().is_some_and(|b| b != r.backend)
            || filter.seed.is_some_and(|s| s != r.seed)
        {
            continue;
        }
        out.insert((r.task, r.word_class, r.setting), r.clone());
    }
    out
}

/// Stored delta, or score minus the selected baseline when none was stored.
fn delta_of(r: &StoredResult, sel: &BTreeMap<Cell, StoredResult>) -> Option<f64> {
    r.delta.or_else(|| {
        let base = sel.get(&(r.task, None, None))?.score?;
        Some(compute_delta(r.score?, base))
    })
}

fn fmt_opt(v: Option<f64>, width: usize) -> String {
    match v {
        Some(v) => format!("{v:>width$.2}"),
        None => format!("{:>width$}", "NULL"),
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub task: Task,
    pub metric: Metric,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineTable {
    pub rows: Vec<BaselineRow>,
}

/// One row per task with a baseline, sorted by task name.
pub fn baseline_table(results: &[StoredResult], filter: &ReportFilter) -> Result<BaselineTable, ReportError> {
    let mut rows: Vec<BaselineRow> = select(results, filter)
        .into_iter()
        .filter(|(k, _)| k.1.is_none() && k.2.is_none())
        .filter_map(|(k, r)| Some(BaselineRow { task: k.0, metric: r.metric, score: r.score? }))
        .collect();
    if rows.is_empty() {
        return Err(ReportError::NoBaselines);
    }
    rows.sort_by(|a, b| a.task.as_str().cmp(b.task.as_str()));
    Ok(BaselineTable { rows })
}

impl BaselineTable {
    pub fn render_text(&self) -> String {
        let mut out = format!("{:<8} {:>9}  {}\n", "task", "baseline", "metric");
        for r in &self.rows {
            let _ = writeln!(out, "{:<8} {:>9.2}  {}", r.task.as_str(), r.score, r.metric.display_name());
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("task,baseline,metric\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.task.as_str(), r.score, r.metric);
        }
        out
    }
}

/// Score and delta for one setting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SettingCell {
    pub score: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub task: Task,
    /// Indexed like [`CorruptionSetting::ALL`].
    pub cells: [SettingCell; 3],
}

impl DeltaRow {
    pub fn cell(&self, setting: CorruptionSetting) -> SettingCell {
        let i = CorruptionSetting::ALL.iter().position(|s| *s == setting).expect("known setting");
        self.cells[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaTable {
    pub word_class: WordClass,
    pub rows: Vec<DeltaRow>,
}

/// Per task, score and delta under each of the three settings.
pub fn delta_table(
    results: &[StoredResult],
    word_class: WordClass,
    filter: &ReportFilter,
) -> Result<DeltaTable, ReportError> {
    let sel = select(results, filter);
    let mut rows: BTreeMap<Task, DeltaRow> = BTreeMap::new();
    for ((task, class, setting), r) in &sel {
        let (Some(class), Some(setting)) = (class, setting) else {
            continue;
        };
        if *class != word_class {
            continue;
        }
        let row = rows.entry(*task).or_insert_with(|| DeltaRow { task: *task, cells: [SettingCell::default(); 3] });
        let i = CorruptionSetting::ALL.iter().position(|s| s == setting).expect("known setting");
        row.cells[i] = SettingCell { score: r.score, delta: delta_of(r, &sel) };
    }
    if rows.is_empty() {
        return Err(ReportError::NoResults(format!("no corrupted runs for {word_class}")));
    }
    Ok(DeltaTable { word_class, rows: rows.into_values().collect() })
}

impl DeltaTable {
    fn label(&self, task: Task) -> String {
        format!("{}-{}", task, self.word_class.as_lower())
    }

    pub fn get(&self, task: Task) -> Option<&DeltaRow> {
        self.rows.iter().find(|r| r.task == task)
    }

    pub fn render_text(&self) -> String {
        let w = 14;
        let mut out = format!("{:<w$}", "data");
        for s in CorruptionSetting::ALL {
            let _ = write!(out, " {:>9} {:>8}", s.title(), "Δ");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<w$}", self.label(r.task));
            for c in &r.cells {
                let _ = write!(out, " {} {}", fmt_opt(c.score, 9), fmt_opt(c.delta, 8));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("data");
        for s in CorruptionSetting::ALL {
            let _ = write!(out, ",{s},{s}-delta");
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&self.label(r.task));
            for c in &r.cells {
                let _ = write!(out, ",{},{}", csv_opt(c.score), csv_opt(c.delta));
            }
            out.push('\n');
        }
        out
    }
}
