//! Cluster entropy H(S,t), RESI Hr(S,t) = H(S,t) - log p(S,t), its trailing
//! six-window average and the probability-weighted aggregation over
//! sub-regions.
//!
//! Entropy carries the explicit minus sign, so it is never negative. Events
//! inside S but outside every quaking mesh count toward quakes(S,t) and hence
//! toward p(S,t), but belong to no cluster: the cluster masses may sum to
//! less than one and are used as they are, without renormalization. The
//! missing share is reported as `residual`.

use serde::{Deserialize, Serialize};

use crate::catalog::Event;
use crate::clustering::{cluster_probabilities, make_clusters};
use crate::grid::{bin_events, quaking_meshes, GridSpec, MeshWindowCounts, Region};
use crate::time::{TimeWindow, WindowLength};
use crate::{Error, Result};

/// Number of windows averaged into `hr_avr` for monthly series.
pub const AVERAGE_SPAN: usize = 6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogBase {
    /// Factor turning natural-log values into this base.
    pub fn scale(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => 1.0 / std::f64::consts::LN_2,
            LogBase::Ten => 1.0 / std::f64::consts::LN_10,
        }
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Shannon entropy `-Σ p ln p` in nats, with `0 ln 0 = 0`.
pub fn entropy_h(probabilities: &[f64]) -> Result<f64> {
    if let Some(&bad) = probabilities.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidProbability(bad));
    }
    let h = -compensated_sum(probabilities.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()));
    Ok(h.max(0.0))
}

/// `h - ln(p_s)`; `None` when `p_s` is not a positive probability.
pub fn resi(h: f64, p_s: f64) -> Option<f64> {
    (p_s > 0.0 && p_s.is_finite()).then(|| h - p_s.ln())
}

/// Probability-weighted mean of sub-region RESI values, from
/// `(p(S_i,t), Hr(S_i,t))` pairs. `None` when the weights sum to zero.
pub fn aggregate_resi(subcells: &[(f64, f64)]) -> Option<f64> {
    let total = compensated_sum(subcells.iter().map(|(p, _)| *p));
    if total <= 0.0 {
        return None;
    }
    Some(compensated_sum(subcells.iter().map(|(p, hr)| p * hr)) / total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResiPoint {
    pub cell: usize,
    pub window: TimeWindow,
    /// Entropy of the cluster distribution; 0 when `no_data`.
    pub h: f64,
    /// RESI; 0 when `no_data`.
    pub hr: f64,
    /// Trailing average of `hr`; `None` when `no_data`.
    pub hr_avr: Option<f64>,
    /// p(S,t); 0 when the universe saw no events.
    pub p_s: f64,
    pub residual: f64,
    pub clusters: usize,
    pub no_data: bool,
}

impl ResiPoint {
    /// RESI when the point carries data.
    pub fn defined_hr(&self) -> Option<f64> {
        (!self.no_data).then_some(self.hr)
    }
}

/// Clusters one region/window and evaluates H and Hr on it.
pub fn resi_point(cell: usize, counts: &MeshWindowCounts, spec: &GridSpec, base: LogBase) -> ResiPoint {
    let msh = quaking_meshes(counts, spec);
    let partition = make_clusters(&msh);
    let p_s = if counts.universe_total > 0 {
        counts.region_total as f64 / counts.universe_total as f64
    } else {
        0.0
    };
    let mut point = ResiPoint {
        cell,
        window: counts.window,
        h: 0.0,
        hr: 0.0,
        hr_avr: None,
        p_s,
        residual: 0.0,
        clusters: partition.len(),
        no_data: true,
    };
    if partition.is_empty() {
        return point;
    }
    let Some(probs) = cluster_probabilities(&partition, counts) else {
        return point;
    };
    let h = entropy_h(&probs.conditional).expect("cluster probabilities are valid");
    if let Some(hr) = resi(h, probs.p_s) {
        let scale = base.scale();
        point.h = h * scale;
        point.hr = hr * scale;
        point.residual = probs.residual;
        point.no_data = false;
    }
    point
}

/// Trailing mean of the defined `hr` values over windows `k-5..=k`. Yearly
/// series use `hr` itself.
pub fn hr_avr(series: &[ResiPoint], k: usize) -> Option<f64> {
    let point = series.get(k)?;
    if point.no_data {
        return None;
    }
    if point.window.len == WindowLength::Year {
        return Some(point.hr);
    }
    let lo = (k + 1).saturating_sub(AVERAGE_SPAN);
    let defined: Vec<f64> = series[lo..=k].iter().filter_map(ResiPoint::defined_hr).collect();
    Some(defined.iter().sum::<f64>() / defined.len() as f64)
}

pub fn fill_hr_avr(series: &mut [ResiPoint]) {
    let avr: Vec<Option<f64>> = (0..series.len()).map(|k| hr_avr(series, k)).collect();
    for (p, a) in series.iter_mut().zip(avr) {
        p.hr_avr = a;
    }
}

/// RESI series for one cell from its per-window counts (already carrying the
/// universe totals).
pub fn resi_series(cell: usize, counts: &[MeshWindowCounts], spec: &GridSpec, base: LogBase) -> Vec<ResiPoint> {
    let mut series: Vec<ResiPoint> = counts.iter().map(|c| resi_point(cell, c, spec, base)).collect();
    fill_hr_avr(&mut series);
    series
}

/// RESI series for `cell` straight from events, with `universe` supplying
/// the p(S,t) denominator.
pub fn resi_series_for_region(
    events: &[Event],
    universe: &Region,
    cell_id: usize,
    cell: &Region,
    spec: &GridSpec,
    windows: &[TimeWindow],
    base: LogBase,
) -> Result<Vec<ResiPoint>> {
    let binned = bin_events(events, universe, spec, windows)?;
    let per_cell = binned
        .iter()
        .map(|c| c.restrict(cell, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(resi_series(cell_id, &per_cell, spec, base))
}
