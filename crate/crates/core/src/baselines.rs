//! Pattern Informatics (PI) and Relative Intensity (RI) baselines, and the
//! top-n selection that turns them into binary alarms comparable with
//! `Hr_sat`.

use serde::{Deserialize, Serialize};

use crate::catalog::Event;
use crate::grid::CellLayout;
use crate::time::Month;
use crate::{Error, Result};

/// Monthly event counts per cell, on a shared month axis.
#[derive(Clone, Debug, PartialEq)]
pub struct CellCounts {
    pub start: Month,
    /// `counts[cell][month]`
    pub counts: Vec<Vec<u32>>,
}

impl CellCounts {
    pub fn new(start: Month, counts: Vec<Vec<u32>>) -> Result<Self> {
        let months = counts.first().map_or(0, Vec::len);
        if counts.iter().any(|c| c.len() != months) {
            return Err(Error::Series("cell count rows differ in length".into()));
        }
        Ok(CellCounts { start, counts })
    }

    /// Counts of events with magnitude ≥ `cutoff` per cell and month over
    /// `months` months from `start`.
    pub fn from_events(events: &[Event], layout: &CellLayout, start: Month, months: usize, cutoff: f64) -> Self {
        let mut counts = vec![vec![0u32; months]; layout.len()];
        for ev in events {
            if ev.magnitude < cutoff {
                continue;
            }
            let offset = ev.month().since(start);
            if offset < 0 || offset as usize >= months {
                continue;
            }
            if let Some(cell) = layout.cell_of(ev.lat, ev.lon) {
                counts[cell][offset as usize] += 1;
            }
        }
        CellCounts { start, counts }
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    pub fn months(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    fn index(&self, m: Month) -> Option<usize> {
        let k = m.since(self.start);
        (k >= 0 && (k as usize) < self.months()).then_some(k as usize)
    }

    pub fn month_at(&self, k: usize) -> Month {
        self.start.plus(k as i32)
    }

    fn prefix_sums(&self) -> Vec<Vec<u64>> {
        self.counts
            .iter()
            .map(|row| {
                let mut acc = Vec::with_capacity(row.len() + 1);
                acc.push(0u64);
                for &c in row {
                    acc.push(acc.last().unwrap() + c as u64);
                }
                acc
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PiConfig {
    pub t0: Month,
    pub t1: Month,
    pub cutoff: f64,
    pub tb_step_months: u32,
}

impl Default for PiConfig {
    fn default() -> Self {
        PiConfig {
            t0: Month::ym(1983, 1),
            t1: Month::ym(1987, 1),
            cutoff: 2.0,
            tb_step_months: 1,
        }
    }
}

impl PiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t0 >= self.t1 {
            return Err(Error::Config(format!("PI reference start {} must precede {}", self.t0, self.t1)));
        }
        if self.tb_step_months == 0 {
            return Err(Error::Config("PI reference step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiConfig {
    pub t0: Month,
    pub cutoff: f64,
}

impl Default for RiConfig {
    fn default() -> Self {
        RiConfig {
            t0: Month::ym(1983, 1),
            cutoff: 2.0,
        }
    }
}

/// Relative stdev below which a map counts as flat.
const FLAT_MAP: f64 = 1e-12;

/// Subtracts the cross-cell mean and divides by the cross-cell population
/// stdev; a flat map normalizes to zeros.
fn normalize(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !std.is_finite() || std <= FLAT_MAP * mean.abs().max(1.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / std).collect()
}

/// PI(S_i, t0, t1, t) for every cell; `None` unless `t1 < t` and every
/// month involved lies on the count axis.
pub fn pi_index(counts: &CellCounts, cfg: &PiConfig, t: Month) -> Option<Vec<f64>> {
    pi_with_prefix(counts, &counts.prefix_sums(), cfg, t)
}

fn pi_with_prefix(counts: &CellCounts, prefix: &[Vec<u64>], cfg: &PiConfig, t: Month) -> Option<Vec<f64>> {
    if t <= cfg.t1 || counts.cells() == 0 {
        return None;
    }
    let (i0, i1, it) = (counts.index(cfg.t0)?, counts.index(cfg.t1)?, counts.index(t)?);
    let cells = counts.cells();
    let rate = |cell: usize, from: usize, to: usize| {
        (prefix[cell][to + 1] - prefix[cell][from]) as f64 / (to - from + 1) as f64
    };

    let mut mean_change = vec![0.0f64; cells];
    let mut references = 0usize;
    let mut tb = i0;
    while tb <= i1 {
        let now: Vec<f64> = (0..cells).map(|c| rate(c, tb, it)).collect();
        let then: Vec<f64> = (0..cells).map(|c| rate(c, tb, i1)).collect();
        let (now, then) = (normalize(&now), normalize(&then));
        for c in 0..cells {
            mean_change[c] += now[c] - then[c];
        }
        references += 1;
        tb += cfg.tb_step_months as usize;
    }
    let squares: Vec<f64> = mean_change
        .iter()
        .map(|s| (s / references as f64).powi(2))
        .collect();
    let background = squares.iter().sum::<f64>() / cells as f64;
    Some(squares.iter().map(|s| s - background).collect())
}

/// PI for every month of the axis, as `series[cell][month]`.
pub fn pi_series(counts: &CellCounts, cfg: &PiConfig) -> Vec<Vec<Option<f64>>> {
    let prefix = counts.prefix_sums();
    let mut out = vec![vec![None; counts.months()]; counts.cells()];
    for k in 0..counts.months() {
        if let Some(values) = pi_with_prefix(counts, &prefix, cfg, counts.month_at(k)) {
            for (cell, v) in values.into_iter().enumerate() {
                out[cell][k] = Some(v);
            }
        }
    }
    out
}

/// RI(S_i, t0, t-1) for every cell: the Moore-neighbourhood mean of event
/// counts over `[t0, t - 1]`, as a share of the map total. `None` when
/// `t ≤ t0` or the map saw no events.
pub fn ri_index(counts: &CellCounts, layout: &CellLayout, cfg: &RiConfig, t: Month) -> Option<Vec<f64>> {
    ri_with_prefix(counts, &counts.prefix_sums(), layout, cfg, t)
}

fn ri_with_prefix(
    counts: &CellCounts,
    prefix: &[Vec<u64>],
    layout: &CellLayout,
    cfg: &RiConfig,
    t: Month,
) -> Option<Vec<f64>> {
    if t <= cfg.t0 || counts.cells() != layout.len() {
        return None;
    }
    let i0 = counts.index(cfg.t0)?;
    let last = counts.index(t.plus(-1))?;
    let totals: Vec<f64> = (0..counts.cells())
        .map(|c| (prefix[c][last + 1] - prefix[c][i0]) as f64)
        .collect();
    let local: Vec<f64> = (0..counts.cells())
        .map(|c| {
            let hood = layout.moore_neighborhood(c);
            hood.iter().map(|&n| totals[n]).sum::<f64>() / hood.len() as f64
        })
        .collect();
    let sum: f64 = local.iter().sum();
    if sum <= 0.0 {
        return None;
    }
    Some(local.iter().map(|n| n / sum).collect())
}

pub fn ri_series(counts: &CellCounts, layout: &CellLayout, cfg: &RiConfig) -> Vec<Vec<Option<f64>>> {
    let prefix = counts.prefix_sums();
    let mut out = vec![vec![None; counts.months()]; counts.cells()];
    for k in 0..counts.months() {
        if let Some(values) = ri_with_prefix(counts, &prefix, layout, cfg, counts.month_at(k)) {
            for (cell, v) in values.into_iter().enumerate() {
                out[cell][k] = Some(v);
            }
        }
    }
    out
}

/// `round_half_up(m · t_f / t_hr)`.
pub fn topn_count(m: usize, t_f: usize, t_hr: usize) -> usize {
    if t_hr == 0 {
        return 0;
    }
    (2 * m * t_f + t_hr) / (2 * t_hr)
}

/// Flags the `n = round(m · t_f / t_hr)` largest defined values of `f`.
/// Ties go to the earlier time. If `n` exceeds the number of defined
/// points, every defined point is flagged.
pub fn high_topn(f: &[Option<f64>], m: usize, t_f: usize, t_hr: usize) -> Vec<bool> {
    let n = topn_count(m, t_f, t_hr);
    let mut order: Vec<(usize, f64)> = f
        .iter()
        .enumerate()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = vec![false; f.len()];
    for (k, _) in order.into_iter().take(n) {
        out[k] = true;
    }
    out
}
