//! CSV and SVG renderings of a [`SummaryTable`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{AppError, Result};
use crate::experiments::{Metric, SummaryTable};

pub const CSV_HEADER: &str = "estimator,b,m,bias,variance,mse,mse_1e3,n_missing";

/// Ten significant digits in scientific notation.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn csv_string(table: &SummaryTable) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &table.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.estimator,
            r.b,
            r.m,
            fmt_sig(r.bias),
            fmt_sig(r.variance),
            fmt_sig(r.mse),
            fmt_sig(r.mse_1e3()),
            r.n_missing
        );
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn write_csv(table: &SummaryTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(AppError::Usage("refusing to write an empty table".into()));
    }
    write_text(path, &csv_string(table))
}

const PALETTE: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];
const WIDTH: f64 = 720.0;
const PANEL: f64 = 300.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;

/// One line chart per `m`, stacked vertically: x is the block size, y the
/// metric times 10³, one polyline per estimator.
pub fn svg_string(table: &SummaryTable, metric: Metric) -> String {
    let height = PANEL * table.m_max as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let (bmin, bmax) = (
        *table.block_grid.iter().min().unwrap_or(&0) as f64,
        *table.block_grid.iter().max().unwrap_or(&1) as f64,
    );
    let bspan = if bmax > bmin { bmax - bmin } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = PANEL - TOP - BOTTOM;
    for m in 1..=table.m_max {
        let y0 = PANEL * (m - 1) as f64;
        let vals: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| metric.of(r) * 1e3)
            .filter(|v| v.is_finite())
            .collect();
        let mut lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        let px = |b: f64| LEFT + (b - bmin) / bspan * plot_w;
        let py = |v: f64| y0 + TOP + (hi - v) / (hi - lo) * plot_h;

        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{} x 1e3, m = {m}</text>"#,
            LEFT + plot_w / 2.0,
            y0 + 24.0,
            metric.as_str()
        );
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT:.1}" y="{:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="#444"/>"##,
            y0 + TOP
        );
        for t in 0..=4 {
            let v = lo + (hi - lo) * t as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
                LEFT - 6.0,
                py(v) + 4.0
            );
        }
        for &b in &table.block_grid {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{b}</text>"#,
                px(b as f64),
                y0 + PANEL - BOTTOM + 16.0
            );
        }
        for (k, &est) in table.estimators.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let points: Vec<String> = table
                .rows
                .iter()
                .filter(|r| r.estimator == est && r.m == m)
                .filter_map(|r| {
                    let v = metric.of(r) * 1e3;
                    v.is_finite().then(|| format!("{:.2},{:.2}", px(r.b as f64), py(v)))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points.join(" ")
            );
            let ly = y0 + TOP + 16.0 * k as f64 + 8.0;
            let lx = WIDTH - RIGHT + 16.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
                lx + 20.0
            );
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{est}</text>"#, lx + 26.0, ly + 4.0);
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_svg(table: &SummaryTable, metric: Metric, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(AppError::Usage("refusing to plot an empty table".into()));
    }
    write_text(path, &svg_string(table, metric))
}
