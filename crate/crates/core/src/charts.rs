//! Deterministic SVG charts for the study time series and weight bands.
//!
//! Output depends only on the input values: coordinates are printed with a fixed
//! number of decimals and no timestamps or random ids are emitted.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::study::{TimeseriesRow, WeightBand};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const Y_TICKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    /// Smallest range covering every finite value; widened when flat.
    pub fn covering(values: impl IntoIterator<Item = f64>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values.into_iter().filter(|v| v.is_finite()) {
            min = min.min(v);
            max = max.max(v);
        }
        if min > max {
            return AxisRange { min: 0.0, max: 1.0 };
        }
        if min == max {
            let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.05 };
            return AxisRange {
                min: min - pad,
                max: max + pad,
            };
        }
        AxisRange { min, max }
    }

    fn project(&self, v: f64, lo: f64, hi: f64) -> f64 {
        lo + (v - self.min) / (self.max - self.min) * (hi - lo)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

struct Frame {
    svg: String,
    y: AxisRange,
    n: usize,
}

impl Frame {
    fn new(title: &str, y_label: &str, y: AxisRange, n: usize) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(
            svg,
            r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
        let frame = Frame { svg, y, n };
        frame.axes()
    }

    fn axes(mut self) -> Self {
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            self.svg,
            r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" fill="none" stroke="black"/>"#
        );
        for k in 0..=Y_TICKS {
            let v = self.y.min + (self.y.max - self.y.min) * k as f64 / Y_TICKS as f64;
            let py = self.py(v);
            let _ = writeln!(
                self.svg,
                r##"<line x1="{:.1}" y1="{py:.2}" x2="{x1:.1}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{v:.4}</text>"##,
                x0,
                x0 - 6.0,
                py + 4.0
            );
        }
        self
    }

    fn px(&self, i: usize) -> f64 {
        if self.n <= 1 {
            return (LEFT + WIDTH - RIGHT) / 2.0;
        }
        LEFT + 10.0 + i as f64 / (self.n - 1) as f64 * (WIDTH - RIGHT - LEFT - 20.0)
    }

    fn py(&self, v: f64) -> f64 {
        self.y.project(v, HEIGHT - BOTTOM, TOP)
    }

    fn x_labels(&mut self, labels: &[String]) {
        let step = labels.len().div_ceil(12).max(1);
        for (i, label) in labels.iter().enumerate().step_by(step) {
            let x = self.px(i);
            let y = HEIGHT - BOTTOM + 16.0;
            let _ = writeln!(
                self.svg,
                r#"<text x="{x:.2}" y="{y:.1}" text-anchor="end" transform="rotate(-45 {x:.2} {y:.1})">{}</text>"#,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

/// Line chart with one marker per point. Non-finite values are skipped.
pub fn line_chart(title: &str, y_label: &str, points: &[(String, f64)]) -> String {
    let y = AxisRange::covering(points.iter().map(|p| p.1));
    let mut frame = Frame::new(title, y_label, y, points.len());
    let coords: Vec<(f64, f64)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1.is_finite())
        .map(|(i, p)| (frame.px(i), frame.py(p.1)))
        .collect();
    if !coords.is_empty() {
        let path: Vec<String> = coords.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(
            frame.svg,
            r##"<polyline points="{}" fill="none" stroke="#1f4e79" stroke-width="1.5"/>"##,
            path.join(" ")
        );
    }
    for (x, y) in &coords {
        let _ = writeln!(
            frame.svg,
            r##"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#1f4e79"/>"##
        );
    }
    let labels: Vec<String> = points.iter().map(|p| p.0.clone()).collect();
    frame.x_labels(&labels);
    frame.finish()
}

/// One whisker per group from the 5% to the 95% quantile, with the mean marked.
pub fn band_chart(title: &str, bands: &[WeightBand]) -> String {
    let y = AxisRange::covering(bands.iter().flat_map(|b| [b.q05, b.q95, b.mean]));
    let mut frame = Frame::new(title, "weight", y, bands.len());
    for (i, b) in bands.iter().enumerate() {
        let x = frame.px(i);
        let (lo, hi, mid) = (frame.py(b.q05), frame.py(b.q95), frame.py(b.mean));
        let _ = writeln!(
            frame.svg,
            r##"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="#555555" stroke-width="2"/><line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}" stroke="#555555"/><line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}" stroke="#555555"/>"##,
            x - 6.0,
            x + 6.0,
            x - 6.0,
            x + 6.0
        );
        let _ = writeln!(
            frame.svg,
            r##"<rect class="marker" x="{:.2}" y="{:.2}" width="8" height="8" fill="#c0392b"/>"##,
            x - 4.0,
            mid - 4.0
        );
    }
    let labels: Vec<String> = bands.iter().map(|b| b.group.to_string()).collect();
    frame.x_labels(&labels);
    frame.finish()
}

/// Writes `normalized_kirchhoff.svg`, `density.svg` and `weights_by_year.svg`.
pub fn emit_charts(dir: &Path, rows: &[TimeseriesRow], bands: &[WeightBand]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let series = |f: fn(&TimeseriesRow) -> f64| -> Vec<(String, f64)> {
        rows.iter().map(|r| (r.label.clone(), f(r))).collect()
    };
    let files = [
        (
            "normalized_kirchhoff.svg",
            line_chart(
                "Normalized weighted Kirchhoff index",
                "K_N",
                &series(|r| r.normalized_kirchhoff),
            ),
        ),
        (
            "density.svg",
            line_chart("Network density", "density", &series(|r| r.density)),
        ),
        (
            "weights_by_year.svg",
            band_chart("Edge weights per year (mean, 5%-95%)", bands),
        ),
    ];
    let mut first_error = None;
    for (name, svg) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, svg) {
            log::error!("failed to write {}: {e}", path.display());
            first_error.get_or_insert(Error::io(&path, e));
        }
    }
    first_error.map_or(Ok(()), Err)
}
