//! Self-contained SVG heatmaps of labelled square matrices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const CELL: usize = 28;
const LABEL_SPACE: usize = 110;
const LEGEND_WIDTH: usize = 16;
const LOW: [f64; 3] = [255.0, 255.0, 217.0];
const HIGH: [f64; 3] = [8.0, 29.0, 88.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Annotation {
    /// Two decimals.
    Decimal,
    Integer,
}

/// Linear colour scale between `min` and `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

impl ColorScale {
    /// Range of `values`; `[0, 1]` when empty.
    pub fn fit(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if min.is_finite() {
            Self { min, max }
        } else {
            Self { min: 0.0, max: 1.0 }
        }
    }

    fn color(&self, v: f64) -> [u8; 3] {
        let span = self.max - self.min;
        let t = if span > 0.0 {
            ((v - self.min) / span).clamp(0.0, 1.0)
        } else {
            1.0
        };
        [0, 1, 2].map(|c| (LOW[c] + t * (HIGH[c] - LOW[c])).round() as u8)
    }
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub labels: &'a [String],
    /// Row-major `n x n` values.
    pub values: &'a [f64],
    pub scale: ColorScale,
    pub annotation: Annotation,
    /// Display order of rows and columns; identity when empty.
    pub order: &'a [usize],
    /// Community of each row, in original order, to outline blocks.
    pub blocks: Option<&'a [usize]>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn annotate(v: f64, a: Annotation) -> String {
    match a {
        Annotation::Decimal => format!("{v:.2}"),
        Annotation::Integer => format!("{}", v.round() as i64),
    }
}

pub fn render_heatmap(h: &Heatmap) -> Result<String> {
    let n = h.labels.len();
    if h.values.len() != n * n {
        return Err(Error::Internal(format!("{} values for a {n} x {n} heatmap", h.values.len())));
    }
    let order: Vec<usize> = if h.order.is_empty() { (0..n).collect() } else { h.order.to_vec() };
    let mut check = order.clone();
    check.sort_unstable();
    if check != (0..n).collect::<Vec<_>>() {
        return Err(Error::Internal("heatmap order is not a permutation".into()));
    }

    let top = 30 + LABEL_SPACE;
    let left = LABEL_SPACE;
    let grid = n * CELL;
    let legend_x = left + grid + 20;
    let width = legend_x + LEGEND_WIDTH + 60;
    let height = top + grid + 20;
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(w, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(w, r#"<text x="{left}" y="20" font-size="14">{}</text>"#, escape(h.title));
    let fs = 8;
    for (pos, &i) in order.iter().enumerate() {
        let label = escape(&h.labels[i]);
        let y = top + pos * CELL + CELL / 2 + 3;
        let _ = writeln!(
            w,
            r#"<text x="{}" y="{y}" font-size="{fs}" text-anchor="end">{label}</text>"#,
            left - 4
        );
        let x = left + pos * CELL + CELL / 2 + 3;
        let _ = writeln!(
            w,
            r#"<text x="{x}" y="{}" font-size="{fs}" transform="rotate(-90 {x} {})">{label}</text>"#,
            top - 4,
            top - 4
        );
    }
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            let v = h.values[i * n + j];
            let [red, green, blue] = h.scale.color(v);
            let (x, y) = (left + c * CELL, top + r * CELL);
            let _ = writeln!(
                w,
                r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#{red:02x}{green:02x}{blue:02x}"/>"##
            );
            let luminance = 0.299 * f64::from(red) + 0.587 * f64::from(green) + 0.114 * f64::from(blue);
            let ink = if luminance < 128.0 { "white" } else { "black" };
            let _ = writeln!(
                w,
                r#"<text x="{}" y="{}" font-size="{fs}" text-anchor="middle" fill="{ink}">{}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 3,
                annotate(v, h.annotation)
            );
        }
    }
    if let Some(blocks) = h.blocks {
        let mut start = 0;
        while start < n {
            let k = blocks[order[start]];
            let mut end = start;
            while end < n && blocks[order[end]] == k {
                end += 1;
            }
            let size = (end - start) * CELL;
            let _ = writeln!(
                w,
                r#"<rect x="{}" y="{}" width="{size}" height="{size}" fill="none" stroke="red" stroke-width="2"/>"#,
                left + start * CELL,
                top + start * CELL
            );
            start = end;
        }
    }
    let _ = writeln!(w, "<defs>");
    let _ = writeln!(w, r#"<linearGradient id="legend" x1="0" y1="1" x2="0" y2="0">"#);
    for (offset, v) in [(0.0, h.scale.min), (1.0, h.scale.max)] {
        let [red, green, blue] = h.scale.color(v);
        let _ = writeln!(w, r##"<stop offset="{offset}" stop-color="#{red:02x}{green:02x}{blue:02x}"/>"##);
    }
    let _ = writeln!(w, "</linearGradient>");
    let _ = writeln!(w, "</defs>");
    let _ = writeln!(
        w,
        r#"<rect x="{legend_x}" y="{top}" width="{LEGEND_WIDTH}" height="{grid}" fill="url(#legend)" stroke="black" stroke-width="0.5"/>"#
    );
    let lx = legend_x + LEGEND_WIDTH + 4;
    let _ = writeln!(
        w,
        r#"<text x="{lx}" y="{}" font-size="10">{}</text>"#,
        top + 8,
        annotate(h.scale.max, h.annotation)
    );
    let _ = writeln!(
        w,
        r#"<text x="{lx}" y="{}" font-size="10">{}</text>"#,
        top + grid,
        annotate(h.scale.min, h.annotation)
    );
    let _ = writeln!(w, "</svg>");
    Ok(s)
}

pub fn write_heatmap(h: &Heatmap, path: &Path) -> Result<()> {
    let svg = render_heatmap(h)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

/// Indices sorted by community, then by original position.
pub fn block_order(communities: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..communities.len()).collect();
    order.sort_by_key(|&i| (communities[i], i));
    order
}
