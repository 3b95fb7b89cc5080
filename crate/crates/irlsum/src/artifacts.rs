//! CSV tables, the reward-weight trajectory log and its SVG chart.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use irlsum_core::metrics::{COMPONENT_NAMES, NUM_COMPONENTS};
use irlsum_core::report::{ComponentTable, EntityStats, OverlapRow};
use irlsum_core::{WeightSnapshot, WeightTrajectory};

use crate::error::{Error, Result};
use crate::fsutil::atomic_write;

/// Column names of the trajectory log.
pub fn trajectory_header() -> Vec<String> {
    let mut cols = vec!["update".to_string()];
    for group in ["phi", "grad", "data_mean", "model_mean"] {
        cols.extend(COMPONENT_NAMES.iter().map(|c| format!("{group}_{c}")));
    }
    cols
}

/// One trajectory row: the weights a reward update was computed at, its
/// gradient, and the two expectations the gradient is the difference of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub update: usize,
    pub phi: [f64; NUM_COMPONENTS],
    pub grad: [f64; NUM_COMPONENTS],
    pub data_mean: [f64; NUM_COMPONENTS],
    pub model_mean: [f64; NUM_COMPONENTS],
}

impl From<&WeightSnapshot> for TrajectoryRow {
    fn from(s: &WeightSnapshot) -> Self {
        TrajectoryRow {
            update: s.update,
            phi: s.phi,
            grad: s.grad,
            data_mean: s.data_mean,
            model_mean: s.model_mean,
        }
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv write");
    for r in rows {
        w.write_record(r).expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub fn trajectory_csv(trajectory: &WeightTrajectory) -> Vec<u8> {
    let rows: Vec<Vec<String>> = trajectory
        .snapshots
        .iter()
        .map(|s| {
            let r = TrajectoryRow::from(s);
            let mut cells = vec![r.update.to_string()];
            for group in [r.phi, r.grad, r.data_mean, r.model_mean] {
                cells.extend(group.iter().map(|v| v.to_string()));
            }
            cells
        })
        .collect();
    csv_bytes(&trajectory_header(), &rows)
}

/// Parses a trajectory log written by [`trajectory_csv`].
pub fn parse_trajectory_csv(bytes: &[u8], path: &Path) -> Result<Vec<TrajectoryRow>> {
    let csv_err = |source| Error::Csv {
        path: path.into(),
        source,
    };
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != trajectory_header() {
        return Err(Error::Config(format!(
            "{}: unexpected trajectory header",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let bad = || Error::Corpus {
            path: path.into(),
            line: i + 2,
            message: "malformed trajectory row".into(),
        };
        let update = rec[0].parse().map_err(|_| bad())?;
        let mut vals = [[0.0; NUM_COMPONENTS]; 4];
        for (g, group) in vals.iter_mut().enumerate() {
            for (k, v) in group.iter_mut().enumerate() {
                *v = rec[1 + g * NUM_COMPONENTS + k].parse().map_err(|_| bad())?;
            }
        }
        let [phi, grad, data_mean, model_mean] = vals;
        rows.push(TrajectoryRow {
            update,
            phi,
            grad,
            data_mean,
            model_mean,
        });
    }
    Ok(rows)
}

const SERIES_COLORS: [&str; NUM_COMPONENTS] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Line chart of the reward weights against the update index, one series per
/// component.
pub fn weight_chart_svg(rows: &[TrajectoryRow], title: &str) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Config("cannot chart an empty trajectory".into()));
    }
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 500.0, 40.0, 350.0);
    let first = rows[0].update as f64;
    let last = rows[rows.len() - 1].update as f64;
    let mut lo = rows.iter().flat_map(|r| r.phi).fold(f64::INFINITY, f64::min);
    let mut hi = rows.iter().flat_map(|r| r.phi).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let x = |u: usize| {
        if last > first {
            left + (u as f64 - first) / (last - first) * (right - left)
        } else {
            (left + right) / 2.0
        }
    };
    let y = |v: f64| bottom - (v - lo) / (hi - lo) * (bottom - top);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"#
    );
    let _ = writeln!(
        s,
        r#"<g class="ticks" font-family="sans-serif" font-size="11"><text x="{left}" y="{}" text-anchor="middle">{first}</text><text x="{right}" y="{}" text-anchor="middle">{last}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="middle">update</text></g>"#,
        bottom + 16.0,
        bottom + 16.0,
        left - 6.0,
        bottom,
        lo,
        left - 6.0,
        top + 4.0,
        hi,
        (left + right) / 2.0,
        bottom + 34.0,
    );
    for (k, name) in COMPONENT_NAMES.iter().enumerate() {
        let color = SERIES_COLORS[k];
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.update), y(r.phi[k])))
            .collect();
        let _ = writeln!(
            s,
            r#"<g class="series" data-component="{name}" stroke="{color}" fill="{color}">"#
        );
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for r in rows {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" data-update="{}" data-value="{}"/>"#,
                x(r.update),
                y(r.phi[k]),
                r.update,
                r.phi[k]
            );
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" stroke="none">phi_{name}</text>"#,
            right + 20.0
        );
        let _ = writeln!(s, "</g>");
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

/// Paths of the two weight-curve artifacts for a system and seed.
pub fn weight_curve_paths(dir: &Path, system: &str, seed: u64) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("trajectory-{system}-seed{seed}.csv")),
        dir.join(format!("weights-{system}-seed{seed}.svg")),
    )
}

/// Writes the trajectory CSV and its chart; returns their paths.
pub fn emit_weight_curves(
    trajectory: &WeightTrajectory,
    dir: &Path,
    system: &str,
    seed: u64,
) -> Result<(PathBuf, PathBuf)> {
    let rows: Vec<TrajectoryRow> = trajectory.snapshots.iter().map(TrajectoryRow::from).collect();
    let svg = weight_chart_svg(&rows, &format!("Reward weights, {system}, seed {seed}"))?;
    let (csv_path, svg_path) = weight_curve_paths(dir, system, seed);
    atomic_write(&csv_path, &trajectory_csv(trajectory))?;
    atomic_write(&svg_path, svg.as_bytes())?;
    Ok((csv_path, svg_path))
}

fn pct(v: f64) -> String {
    format!("{v:.2}")
}

pub fn component_table_csv(table: &ComponentTable) -> Vec<u8> {
    let header = ["system", "rouge_l", "novelty", "coverage", "compression"].map(String::from);
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.system.clone()];
            cells.extend(r.values().map(pct));
            cells
        })
        .collect();
    csv_bytes(&header, &rows)
}

/// Novel n-gram percentages, one row per system and one column per order.
pub fn ngram_profile_csv(profiles: &[(String, Vec<(usize, f64)>)]) -> Vec<u8> {
    let orders: Vec<usize> = profiles
        .first()
        .map(|p| p.1.iter().map(|o| o.0).collect())
        .unwrap_or_default();
    let mut header = vec!["system".to_string()];
    header.extend(orders.iter().map(|n| format!("novel_{n}gram")));
    let rows: Vec<Vec<String>> = profiles
        .iter()
        .map(|(name, prof)| {
            let mut cells = vec![name.clone()];
            cells.extend(prof.iter().map(|o| pct(o.1)));
            cells
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn entity_stats_csv(stats: &[(String, EntityStats)]) -> Vec<u8> {
    let header = ["system", "precision", "recall", "f1", "length"].map(String::from);
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|(name, e)| {
            vec![
                name.clone(),
                format!("{:.4}", e.precision),
                format!("{:.4}", e.recall),
                format!("{:.4}", e.f1),
                pct(e.length),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn overlap_csv(rows: &[OverlapRow]) -> Vec<u8> {
    let header = ["system", "rouge_1", "rouge_2", "unigram_overlap"].map(String::from);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.system.clone(), pct(r.rouge_1), pct(r.rouge_2), pct(r.unigram_overlap)])
        .collect();
    csv_bytes(&header, &rows)
}
