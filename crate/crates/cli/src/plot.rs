//! SVG strip plots of per-item scores from a run record.

use std::fmt::Write;

use crate::eval::RunRecord;

const ROW_H: f64 = 36.0;
const LABEL_W: f64 = 160.0;
const PLOT_W: f64 = 480.0;
const PAD: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Mse,
    Dssim,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Mse => "MSE",
            Metric::Dssim => "DSSIM",
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One row per method: a dot per scored item (filled for test, hollow for
/// train) and a bar at the mean.
pub fn score_strips(record: &RunRecord, metric: Metric) -> String {
    let values: Vec<Vec<(f64, bool)>> = record
        .methods
        .iter()
        .map(|m| {
            m.items
                .iter()
                .filter_map(|i| {
                    let s = i.score.as_ref()?;
                    let v = match metric {
                        Metric::Mse => s.mse,
                        Metric::Dssim => s.dssim,
                    };
                    Some((v, i.split == lumisphere::synth::dataset::Split::Test))
                })
                .collect()
        })
        .collect();
    let max = values.iter().flatten().map(|v| v.0).fold(0.0f64, f64::max);
    let max = if max > 0.0 { max } else { 1.0 };
    let x = |v: f64| LABEL_W + PLOT_W * v / max;
    let height = PAD * 2.0 + ROW_H * record.methods.len() as f64 + 20.0;
    let width = LABEL_W + PLOT_W + PAD;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<text x="{LABEL_W}" y="16">{} per item (max {max:.4})</text>"#, metric.name());
    let axis_y = PAD + ROW_H * record.methods.len() as f64;
    let _ = writeln!(s, r#"<line x1="{LABEL_W}" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#, LABEL_W + PLOT_W);
    for (k, tick) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
        let tx = x(tick * max);
        let _ = writeln!(s, r#"<text x="{tx}" y="{}" text-anchor="middle">{:.3}</text>"#, axis_y + 14.0, tick * max);
        if k > 0 {
            let _ = writeln!(s, r#"<line x1="{tx}" y1="{PAD}" x2="{tx}" y2="{axis_y}" stroke="lightgray"/>"#);
        }
    }
    for (row, (m, vals)) in record.methods.iter().zip(&values).enumerate() {
        let cy = PAD + ROW_H * (row as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LABEL_W - 8.0, cy + 4.0, esc(&m.method));
        for (v, test) in vals {
            let fill = if *test { "steelblue" } else { "none" };
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{cy}" r="3" fill="{fill}" stroke="steelblue" fill-opacity="0.6"/>"#, x(*v));
        }
        if !vals.is_empty() {
            let mean = vals.iter().map(|v| v.0).sum::<f64>() / vals.len() as f64;
            let mx = x(mean);
            let _ = writeln!(s, r#"<line x1="{mx:.2}" y1="{}" x2="{mx:.2}" y2="{}" stroke="crimson" stroke-width="2"/>"#, cy - 10.0, cy + 10.0);
        }
    }
    s.push_str("</svg>\n");
    s
}
