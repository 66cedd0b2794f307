//! CSV, JSON, GeoJSON and SVG outputs. The SVG views are drawn from the CSV
//! and JSON exports alone.

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Deserialize;
use serde_json::{json, Value};

use crate::clustering::{make_clusters, ClusterPartition};
use crate::evaluation::{AlarmFunction, EvalReport};
use crate::grid::{quaking_meshes, GridSpec, MeshWindowCounts};
use crate::pipeline::{Baselines, CellResult};
use crate::time::Month;
use crate::{Error, Result};

pub const SERIES_HEADER: [&str; 7] = ["cell_id", "window_start", "h", "hr", "hr_avr", "p_s", "no_data"];
pub const ALARM_HEADER: [&str; 8] = [
    "cell_id",
    "window_start",
    "hr",
    "hr_avr",
    "hr_sat",
    "activity",
    "high_hr",
    "high_activity",
];
pub const BASELINE_HEADER: [&str; 6] = ["cell_id", "window_start", "pi", "ri", "high_pi", "high_ri"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn write_series_csv<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for c in cells {
        for p in &c.series {
            let hr = p.defined_hr();
            w.write_record([
                c.cell.to_string(),
                p.window.start.to_string(),
                opt(hr.map(|_| p.h)),
                opt(hr),
                opt(p.hr_avr),
                p.p_s.to_string(),
                flag(p.no_data).to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_alarm_csv<W: Write>(cells: &[CellResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ALARM_HEADER)?;
    for c in cells {
        for (k, p) in c.series.iter().enumerate() {
            w.write_record([
                c.cell.to_string(),
                p.window.start.to_string(),
                opt(p.defined_hr()),
                opt(p.hr_avr),
                c.hr_sat[k].to_string(),
                opt(c.activity[k]),
                flag(c.high_hr[k]).to_string(),
                flag(c.high_activity[k]).to_string(),
            ])?;
        }
    }
    finish(w)
}

pub fn write_baseline_csv<W: Write>(b: &Baselines, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BASELINE_HEADER)?;
    for (cell, pi) in b.pi.iter().enumerate() {
        for (k, v) in pi.iter().enumerate() {
            w.write_record([
                cell.to_string(),
                b.start.plus(k as i32).to_string(),
                opt(*v),
                opt(b.ri[cell][k]),
                flag(b.high_pi[cell][k]).to_string(),
                flag(b.high_ri[cell][k]).to_string(),
            ])?;
        }
    }
    finish(w)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct AlarmRow {
    pub cell_id: usize,
    pub window_start: Month,
    pub hr: Option<f64>,
    pub hr_avr: Option<f64>,
    pub hr_sat: f64,
    pub activity: Option<f64>,
    pub high_hr: u8,
    pub high_activity: u8,
}

pub fn read_alarm_csv<R: Read>(input: R) -> Result<Vec<AlarmRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<Vec<AlarmRow>, _>>()?)
}

pub fn write_report_json<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

pub fn read_report_json<R: Read>(input: R) -> Result<EvalReport> {
    Ok(serde_json::from_reader(input)?)
}

/// One feature per cluster, each a multipolygon of its mesh squares in
/// `[lon, lat]` order.
pub fn cluster_geojson(partition: &ClusterPartition, counts: &MeshWindowCounts, spec: &GridSpec) -> Value {
    let region = &counts.region;
    let features: Vec<Value> = partition
        .clusters
        .iter()
        .map(|c| {
            let squares: Vec<Value> = c
                .meshes
                .iter()
                .map(|m| {
                    let lat0 = region.x0 + m.row as f64 * spec.dx;
                    let lon0 = region.y0 + m.col as f64 * spec.dy;
                    let (lat1, lon1) = (lat0 + spec.dx, lon0 + spec.dy);
                    json!([[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]])
                })
                .collect();
            let events: u64 = c.meshes.iter().map(|m| counts.count(*m) as u64).sum();
            json!({
                "type": "Feature",
                "properties": { "cluster_id": c.id, "event_count": events },
                "geometry": { "type": "MultiPolygon", "coordinates": squares },
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "properties": { "window_start": counts.window.start.to_string() },
        "features": features,
    })
}

/// Cluster snapshot of one window over several cells; features carry a
/// `cell_id` property next to `cluster_id` and `event_count`.
pub fn cells_geojson(per_cell: &[MeshWindowCounts], spec: &GridSpec) -> Value {
    let mut features = Vec::new();
    for (cell, counts) in per_cell.iter().enumerate() {
        let partition = make_clusters(&quaking_meshes(counts, spec));
        let mut fc = cluster_geojson(&partition, counts, spec);
        if let Some(list) = fc["features"].as_array_mut() {
            for f in list.iter_mut() {
                f["properties"]["cell_id"] = cell.into();
            }
            features.append(list);
        }
    }
    let start = per_cell.first().map(|c| c.window.start.to_string());
    json!({
        "type": "FeatureCollection",
        "properties": { "window_start": start },
        "features": features,
    })
}

const PLOT_W: f64 = 900.0;
const PLOT_H: f64 = 300.0;
const PAD: f64 = 40.0;

fn polyline(points: &[(usize, f64)], n: usize, lo: f64, hi: f64, colour: &str) -> String {
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |k: usize| PAD + (PLOT_W - 2.0 * PAD) * k as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| PLOT_H - PAD - (PLOT_H - 2.0 * PAD) * (v - lo) / span;
    let mut path = String::new();
    for (k, v) in points {
        let _ = write!(path, "{:.2},{:.2} ", x(*k), y(*v));
    }
    format!(
        "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.2\" points=\"{}\"/>\n",
        path.trim_end()
    )
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Hr (green), Hr_sat (blue) and activity (orange, own scale) for the rows
/// of one cell.
pub fn curve_svg(rows: &[AlarmRow]) -> String {
    let n = rows.len();
    let hr: Vec<(usize, f64)> = rows.iter().enumerate().filter_map(|(k, r)| r.hr.map(|v| (k, v))).collect();
    let sat: Vec<(usize, f64)> = rows.iter().enumerate().map(|(k, r)| (k, r.hr_sat)).collect();
    let act: Vec<(usize, f64)> = rows.iter().enumerate().filter_map(|(k, r)| r.activity.map(|v| (k, v))).collect();
    let (lo, hi) = bounds(hr.iter().chain(&sat).map(|p| p.1));
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let (alo, ahi) = bounds(act.iter().map(|p| p.1));

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let _ = writeln!(
            svg,
            "<text x=\"{PAD}\" y=\"20\" font-size=\"12\">cell {} {} to {}</text>",
            first.cell_id, first.window_start, last.window_start
        );
    }
    if alo.is_finite() {
        svg.push_str(&polyline(&act, n, alo, ahi, "orange"));
    }
    svg.push_str(&polyline(&hr, n, lo, hi, "green"));
    svg.push_str(&polyline(&sat, n, lo, hi, "blue"));
    svg.push_str("</svg>\n");
    svg
}

/// Cells as squares (north up), active ones shaded, with a red dot where
/// Condition A or B holds for `function` at `dt`.
pub fn grid_map_svg(report: &EvalReport, rows: usize, cols: usize, function: AlarmFunction, dt: u32) -> String {
    const SIDE: f64 = 60.0;
    let (w, h) = (cols as f64 * SIDE, rows as f64 * SIDE + 24.0);
    let mut svg = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    let _ = writeln!(
        svg,
        "<text x=\"4\" y=\"16\" font-size=\"12\">{} Δt={dt}</text>",
        function.name()
    );
    for cell in &report.cells {
        let (r, c) = (cell.cell / cols, cell.cell % cols);
        if r >= rows {
            continue;
        }
        let x = c as f64 * SIDE;
        let y = 24.0 + (rows - 1 - r) as f64 * SIDE;
        let fill = if cell.active { "#d8d8d8" } else { "white" };
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{SIDE}\" height=\"{SIDE}\" fill=\"{fill}\" stroke=\"black\"/>"
        );
        let hit = cell
            .functions
            .get(&function)
            .and_then(|per_dt| per_dt.get(&dt))
            .is_some_and(|s| s.condition_a == Some(true) || s.condition_b == Some(true));
        if hit {
            let _ = writeln!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"red\"/>",
                x + SIDE / 2.0,
                y + SIDE / 2.0,
                SIDE / 6.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
