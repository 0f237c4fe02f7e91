//! Minimal SVG line charts with a log-scaled x axis.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{median_l1, SweepRecord, INDEPENDENT};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Epsilon,
    Iterations,
    Projections,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" => Ok(SweepAxis::Epsilon),
            "iterations" => Ok(SweepAxis::Iterations),
            "projections" => Ok(SweepAxis::Projections),
            other => Err(Error::InvalidInput(format!("unknown sweep axis {other:?}"))),
        }
    }
}

impl SweepAxis {
    fn value(self, r: &SweepRecord) -> Option<f64> {
        match self {
            SweepAxis::Epsilon => r.epsilon,
            SweepAxis::Iterations => (r.iterations > 0).then_some(r.iterations as f64),
            SweepAxis::Projections => (r.projections > 0).then_some(r.projections as f64),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Iterations => "iterations T",
            SweepAxis::Projections => "projections L",
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn series_name(r: &SweepRecord) -> String {
    if r.aggregation.is_empty() {
        r.method.clone()
    } else {
        format!("{} ({})", r.method, r.aggregation)
    }
}

/// Chart for one dataset: median L1 over seeds per x value, one line per
/// method and aggregation, and dashed horizontal lines for baselines that do
/// not vary along the axis.
pub fn render_svg(records: &[SweepRecord], dataset: &str, axis: SweepAxis) -> Result<String> {
    let rows: Vec<&SweepRecord> = records
        .iter()
        .filter(|r| r.dataset == dataset && !r.failed())
        .collect();
    // Sweep-invariant rows (one per seed) become baselines.
    let mut baselines: BTreeMap<String, Vec<&SweepRecord>> = BTreeMap::new();
    let mut grouped: BTreeMap<String, BTreeMap<u64, Vec<&SweepRecord>>> = BTreeMap::new();
    for r in &rows {
        let x = if r.method == INDEPENDENT {
            None
        } else {
            axis.value(r)
        };
        match x {
            Some(x) if x > 0.0 => grouped
                .entry(series_name(r))
                .or_default()
                .entry(x.to_bits())
                .or_default()
                .push(r),
            _ => baselines.entry(series_name(r)).or_default().push(r),
        }
    }
    let series: Vec<(String, Vec<(f64, f64)>)> = grouped
        .into_iter()
        .map(|(name, pts)| {
            let mut line: Vec<(f64, f64)> = pts
                .into_iter()
                .filter_map(|(x, rs)| median_l1(rs).map(|y| (f64::from_bits(x), y)))
                .collect();
            line.sort_by(|a, b| a.0.total_cmp(&b.0));
            (name, line)
        })
        .collect();
    let flat: Vec<(String, f64)> = baselines
        .into_iter()
        .filter_map(|(name, rs)| median_l1(rs).map(|y| (name, y)))
        .collect();
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.1.iter().map(|p| p.0))
        .collect();
    if xs.is_empty() && flat.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no records for dataset {dataset}"
        )));
    }
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.1.iter().map(|p| p.1))
        .chain(flat.iter().map(|b| b.1))
        .collect();
    let (mut x0, mut x1) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    if xs.is_empty() {
        (x0, x1) = (1.0, 10.0);
    }
    let (lx0, mut lx1) = (x0.log10(), x1.log10());
    if lx1 - lx0 < 1e-9 {
        lx1 = lx0 + 1.0;
    }
    let y1 = ys.iter().cloned().fold(0.0, f64::max).max(1e-12) * 1.05;
    let px = |x: f64| MARGIN + (x.log10() - lx0) / (lx1 - lx0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / y1 * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>
<line x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">L1 error vs exact</text>"#,
        WIDTH / 2.0,
        escape(dataset),
        WIDTH / 2.0,
        HEIGHT - 16.0,
        axis.label(),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
    );
    // Decade ticks.
    for e in lx0.floor() as i32..=lx1.ceil() as i32 {
        let x = 10f64.powi(e);
        if x < x0 * 0.999 || x > x1 * 1.001 {
            continue;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0
        );
    }
    for k in 0..=4 {
        let y = y1 * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"#,
            MARGIN - 6.0,
            py(y) + 4.0
        );
    }
    let mut legend = 0;
    let mut legend_entry = |s: &mut String, name: &str, color: &str, dashed: bool| {
        let y = MARGIN + 14.0 * legend as f64;
        let dash = if dashed {
            r#" stroke-dasharray="5,4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            WIDTH - MARGIN - 130.0,
            WIDTH - MARGIN - 125.0,
            y + 4.0,
            escape(name)
        );
        legend += 1;
    };
    for (i, (name, y)) in flat.iter().enumerate() {
        let color = COLORS[(series.len() + i) % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN}" y1="{:.2}" x2="{}" y2="{:.2}" stroke="{color}" stroke-dasharray="5,4"/>"#,
            py(*y),
            WIDTH - MARGIN,
            py(*y)
        );
        legend_entry(&mut s, &format!("{name} baseline"), color, true);
    }
    for (i, (name, line)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> = line
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        for &(x, y) in line {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
        legend_entry(&mut s, name, color, false);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes `<figure>_<dataset>.svg` for every dataset present, in first-seen order.
pub fn write_svg(
    records: &[SweepRecord],
    figure: &str,
    axis: SweepAxis,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to emit".into()));
    }
    let mut datasets: Vec<&str> = Vec::new();
    for r in records {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let mut out = Vec::new();
    for d in datasets {
        let path = dir.join(format!("{figure}_{d}.svg"));
        std::fs::write(&path, render_svg(records, d, axis)?)?;
        out.push(path);
    }
    Ok(out)
}
