//! Task x word-class delta matrices, rendered as CSV, text and PNG.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use image::{Rgb, RgbImage};
use serde::Serialize;

use super::{font, select, ReportError, ReportFilter};
use crate::corruption::{CorruptionSetting, WordClass};
use crate::dataset::Task;
use crate::harness::StoredResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapMatrix {
    pub setting: CorruptionSetting,
    pub rows: Vec<Task>,
    pub columns: Vec<WordClass>,
    /// `cells[row][column]`; `None` where no result exists.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl HeatmapMatrix {
    /// Rows are the tasks present anywhere in the results, columns the word
    /// classes present in any corrupted run; both in canonical order.
    pub fn from_results(
        results: &[StoredResult],
        setting: CorruptionSetting,
        filter: &ReportFilter,
    ) -> Result<Self, ReportError> {
        let sel = select(results, filter);
        let rows: Vec<Task> = sel.keys().map(|k| k.0).collect::<BTreeSet<_>>().into_iter().collect();
        let columns: Vec<WordClass> = sel.keys().filter_map(|k| k.1).collect::<BTreeSet<_>>().into_iter().collect();
        let mut any = false;
        let cells = rows
            .iter()
            .map(|&t| {
                columns
                    .iter()
                    .map(|&c| {
                        let v = sel.get(&(t, Some(c), Some(setting))).and_then(|r| super::delta_of(r, &sel));
                        any |= v.is_some();
                        v
                    })
                    .collect()
            })
            .collect();
        if !any {
            return Err(ReportError::NoResults(format!("no deltas for {setting}")));
        }
        Ok(HeatmapMatrix { setting, rows, columns, cells })
    }

    pub fn get(&self, task: Task, class: WordClass) -> Option<f64> {
        let r = self.rows.iter().position(|t| *t == task)?;
        let c = self.columns.iter().position(|x| *x == class)?;
        self.cells[r][c]
    }

    /// Header `task,<classes>`; missing cells are empty fields; values use
    /// the shortest exact round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("task");
        for c in &self.columns {
            out.push(',');
            out.push_str(c.as_lower());
        }
        out.push('\n');
        for (t, row) in self.rows.iter().zip(&self.cells) {
            out.push_str(t.as_str());
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{}\n{:<8}", self.setting.title(), "");
        for c in &self.columns {
            let _ = write!(out, "{:>9}", c.as_lower());
        }
        out.push('\n');
        for (t, row) in self.rows.iter().zip(&self.cells) {
            let _ = write!(out, "{:<8}", t.as_str());
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(out, "{v:>9.2}");
                    }
                    None => {
                        let _ = write!(out, "{:>9}", "NULL");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    /// Largest absolute delta, or 1 when every cell is zero.
    pub fn data_bound(&self) -> f64 {
        let m = self.cells.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    /// Diverging colour image centred on zero. `scale_bound` pins the
    /// colour range to `[-bound, bound]`; otherwise it follows the data.
    pub fn render_image(&self, scale_bound: Option<f64>) -> RgbImage {
        let bound = scale_bound.filter(|b| *b > 0.0).unwrap_or_else(|| self.data_bound());
        let s = SCALE;
        let char_w = (font::WIDTH + 1) * s;
        let line_h = font::HEIGHT * s;
        let label_w = self.rows.iter().map(|t| t.as_str().len()).max().unwrap_or(0) as u32 * char_w;
        let cell_w = 6 * char_w + 2 * PAD;
        let cell_h = line_h + 2 * PAD;
        let grid_x = MARGIN + label_w + PAD;
        let grid_y = MARGIN + 2 * (line_h + PAD);
        let grid_w = cell_w * self.columns.len() as u32;
        let grid_h = cell_h * self.rows.len() as u32;
        let legend_x = grid_x + grid_w + 2 * PAD;
        let legend_w = 3 * PAD + 7 * char_w;
        let width = legend_x + legend_w + MARGIN;
        let height = grid_y + grid_h.max(4 * line_h) + MARGIN;

        let mut img = RgbImage::from_pixel(width, height, WHITE);
        draw_text(&mut img, MARGIN, MARGIN, self.setting.title(), BLACK);
        for (j, c) in self.columns.iter().enumerate() {
            let x = grid_x + j as u32 * cell_w + PAD;
            draw_text(&mut img, x, MARGIN + line_h + PAD, c.as_lower(), BLACK);
        }
        for (i, (t, row)) in self.rows.iter().zip(&self.cells).enumerate() {
            let y = grid_y + i as u32 * cell_h;
            draw_text(&mut img, MARGIN, y + PAD, t.as_str(), BLACK);
            for (j, v) in row.iter().enumerate() {
                let x = grid_x + j as u32 * cell_w;
                let (fill, ink) = match v {
                    Some(v) => {
                        let t = (v / bound).clamp(-1.0, 1.0);
                        (diverging(t), if t.abs() > 0.6 { WHITE } else { BLACK })
                    }
                    None => (MISSING, BLACK),
                };
                fill_rect(&mut img, x + 1, y + 1, cell_w - 2, cell_h - 2, fill);
                if let Some(v) = v {
                    draw_text(&mut img, x + PAD, y + PAD, &format!("{v:.1}"), ink);
                }
            }
        }

        let bar_h = grid_h.max(4 * line_h);
        for dy in 0..bar_h {
            let t = 1.0 - 2.0 * dy as f64 / (bar_h.max(2) - 1) as f64;
            fill_rect(&mut img, legend_x, grid_y + dy, 2 * PAD, 1, diverging(t));
        }
        let tx = legend_x + 3 * PAD;
        draw_text(&mut img, tx, grid_y, &format!("+{bound:.1}"), BLACK);
        draw_text(&mut img, tx, grid_y + (bar_h - line_h) / 2, "0", BLACK);
        draw_text(&mut img, tx, grid_y + bar_h - line_h, &format!("-{bound:.1}"), BLACK);
        img
    }

    pub fn write_png(&self, path: impl AsRef<Path>, scale_bound: Option<f64>) -> Result<(), ReportError> {
        self.render_image(scale_bound)
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| ReportError::Image(e.to_string()))
    }
}

const SCALE: u32 = 2;
const PAD: u32 = 6;
const MARGIN: u32 = 10;
const WHITE: Rgb<u8> = Rgb([255, 255, 255]);
const BLACK: Rgb<u8> = Rgb([0, 0, 0]);
const MISSING: Rgb<u8> = Rgb([200, 200, 200]);
const NEGATIVE: [f64; 3] = [178.0, 24.0, 43.0];
const POSITIVE: [f64; 3] = [33.0, 102.0, 172.0];

/// White at 0, red towards -1, blue towards +1.
pub fn diverging(t: f64) -> Rgb<u8> {
    let t = t.clamp(-1.0, 1.0);
    let end = if t < 0.0 { NEGATIVE } else { POSITIVE };
    let a = t.abs();
    let mix = |k: usize| (255.0 + (end[k] - 255.0) * a).round() as u8;
    Rgb([mix(0), mix(1), mix(2)])
}

fn fill_rect(img: &mut RgbImage, x: u32, y: u32, w: u32, h: u32, color: Rgb<u8>) {
    for yy in y..(y + h).min(img.height()) {
        for xx in x..(x + w).min(img.width()) {
            img.put_pixel(xx, yy, color);
        }
    }
}

fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, color: Rgb<u8>) {
    let advance = (font::WIDTH + 1) * SCALE;
    for (k, ch) in text.chars().enumerate() {
        let bits = font::glyph(ch);
        let ox = x + k as u32 * advance;
        for (row, b) in bits.iter().enumerate() {
            for col in 0..font::WIDTH {
                if b & (1 << (font::WIDTH - 1 - col)) != 0 {
                    fill_rect(img, ox + col * SCALE, y + row as u32 * SCALE, SCALE, SCALE, color);
                }
            }
        }
    }
}
