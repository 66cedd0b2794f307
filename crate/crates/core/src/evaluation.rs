//! Scoring binary alarm series against activation (`high_activity`) with
//! `prec` and `delay`, Conditions A and B against the all-ones reference,
//! and the per-map report.
//!
//! Series are indexed by month on a shared axis. Index ranges are inclusive.
//! A ratio with an empty denominator is undefined (`None`), never zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baselines::CellCounts;
use crate::time::Month;
use crate::{Error, Result};

pub fn unit(x: f64) -> u8 {
    u8::from(x > 0.0)
}

fn range_ok(len: usize, ts: usize, te: usize, dt: usize) -> bool {
    dt > 0 && te < len && ts + dt <= te
}

/// Share of alarm times `t ∈ [ts, te - dt]` followed by an activation in
/// `(t, t + dt]`.
pub fn prec(f: &[bool], g: &[bool], ts: usize, te: usize, dt: usize) -> Option<f64> {
    if f.len() != g.len() || !range_ok(f.len(), ts, te, dt) {
        return None;
    }
    // running count of activations in (t, t + dt]
    let mut ahead: usize = g[ts + 1..=ts + dt].iter().filter(|&&v| v).count();
    let (mut hits, mut alarms) = (0usize, 0usize);
    for t in ts..=te - dt {
        if t > ts {
            ahead -= usize::from(g[t]);
            ahead += usize::from(g[t + dt]);
        }
        if f[t] {
            alarms += 1;
            hits += usize::from(ahead > 0);
        }
    }
    (alarms > 0).then(|| hits as f64 / alarms as f64)
}

/// Share of activation times `t ∈ [ts + dt, te]` preceded by an alarm in
/// `[t - dt, t - 1]`.
pub fn delay(g: &[bool], f: &[bool], ts: usize, te: usize, dt: usize) -> Option<f64> {
    if f.len() != g.len() || !range_ok(f.len(), ts, te, dt) {
        return None;
    }
    let mut behind: usize = f[ts..ts + dt].iter().filter(|&&v| v).count();
    let (mut hits, mut activations) = (0usize, 0usize);
    for t in ts + dt..=te {
        if t > ts + dt {
            behind -= usize::from(f[t - dt - 1]);
            behind += usize::from(f[t - 1]);
        }
        if g[t] {
            activations += 1;
            hits += usize::from(behind > 0);
        }
    }
    (activations > 0).then(|| hits as f64 / activations as f64)
}

/// `prec(f, g) > prec(random, g)`, with random ≡ 1.
pub fn condition_a(f: &[bool], g: &[bool], ts: usize, te: usize, dt: usize) -> Option<bool> {
    let random = vec![true; f.len()];
    Some(prec(f, g, ts, te, dt)? > prec(&random, g, ts, te, dt)?)
}

/// `delay(g, f) > delay(random, f)`, with random ≡ 1.
pub fn condition_b(f: &[bool], g: &[bool], ts: usize, te: usize, dt: usize) -> Option<bool> {
    let random = vec![true; g.len()];
    Some(delay(g, f, ts, te, dt)? > delay(&random, f, ts, te, dt)?)
}

/// Cells whose mean monthly count over the whole axis is at least one.
pub fn active_cells(counts: &CellCounts) -> Vec<bool> {
    let months = counts.months() as u64;
    counts
        .counts
        .iter()
        .map(|row| months > 0 && row.iter().map(|&c| c as u64).sum::<u64>() >= months)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmFunction {
    HrSat,
    Pi,
    Ri,
}

impl AlarmFunction {
    pub const ALL: [AlarmFunction; 3] = [AlarmFunction::HrSat, AlarmFunction::Pi, AlarmFunction::Ri];

    pub fn name(self) -> &'static str {
        match self {
            AlarmFunction::HrSat => "hr_sat",
            AlarmFunction::Pi => "pi",
            AlarmFunction::Ri => "ri",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub delta_ts: Vec<u32>,
    /// Last month of data.
    pub te: Month,
    pub hr_sat_start: Month,
    pub pi_start: Month,
    pub ri_start: Month,
    /// When set, every function is scored from this month instead of its own
    /// start.
    pub shared_start: Option<Month>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            delta_ts: vec![12, 24, 36],
            te: Month::ym(2017, 3),
            hr_sat_start: Month::ym(1986, 1),
            pi_start: Month::ym(1987, 1),
            ri_start: Month::ym(1983, 1),
            shared_start: None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.delta_ts.is_empty() {
            return Err(Error::Config("at least one Δt is required".into()));
        }
        if let Some(bad) = self.delta_ts.iter().find(|&&d| d == 0 || d > 36) {
            return Err(Error::Config(format!("Δt must lie in 1..=36 months, got {bad}")));
        }
        Ok(())
    }

    pub fn start(&self, f: AlarmFunction) -> Month {
        self.shared_start.unwrap_or(match f {
            AlarmFunction::HrSat => self.hr_sat_start,
            AlarmFunction::Pi => self.pi_start,
            AlarmFunction::Ri => self.ri_start,
        })
    }
}

/// Binary series for one cell on a monthly axis starting at `axis_start`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellInputs {
    pub cell: usize,
    pub axis_start: Month,
    pub high_activity: Vec<bool>,
    pub alarms: BTreeMap<AlarmFunction, Vec<bool>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub prec: Option<f64>,
    pub delay: Option<f64>,
    pub condition_a: Option<bool>,
    pub condition_b: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: usize,
    pub active: bool,
    pub functions: BTreeMap<AlarmFunction, BTreeMap<u32, Score>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub condition_a: usize,
    pub condition_b: usize,
    pub either: usize,
    pub evaluable: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub te: Month,
    pub delta_ts: Vec<u32>,
    pub cells: Vec<CellReport>,
    pub active_cells: Vec<usize>,
    /// Condition tallies over active cells, per function and Δt.
    pub summary: BTreeMap<AlarmFunction, BTreeMap<u32, Tally>>,
}

pub fn score_cell(input: &CellInputs, active: bool, cfg: &EvalConfig) -> CellReport {
    let len = input.high_activity.len();
    let te = cfg.te.since(input.axis_start);
    let mut functions = BTreeMap::new();
    for (&func, f) in &input.alarms {
        let ts = cfg.start(func).since(input.axis_start);
        let mut per_dt = BTreeMap::new();
        for &dt in &cfg.delta_ts {
            let score = if ts < 0 || te < 0 || te as usize >= len || f.len() != len {
                Score::default()
            } else {
                let (ts, te, dt_u) = (ts as usize, te as usize, dt as usize);
                let g = &input.high_activity;
                Score {
                    prec: prec(f, g, ts, te, dt_u),
                    delay: delay(g, f, ts, te, dt_u),
                    condition_a: condition_a(f, g, ts, te, dt_u),
                    condition_b: condition_b(f, g, ts, te, dt_u),
                }
            };
            per_dt.insert(dt, score);
        }
        functions.insert(func, per_dt);
    }
    CellReport {
        cell: input.cell,
        active,
        functions,
    }
}

/// Scores every cell; `active[c]` flags cell id `c`.
pub fn evaluate_all(inputs: &[CellInputs], active: &[bool], cfg: &EvalConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let mut cells: Vec<CellReport> = inputs
        .iter()
        .map(|input| score_cell(input, active.get(input.cell).copied().unwrap_or(false), cfg))
        .collect();
    cells.sort_by_key(|c| c.cell);

    let mut summary: BTreeMap<AlarmFunction, BTreeMap<u32, Tally>> = BTreeMap::new();
    for cell in cells.iter().filter(|c| c.active) {
        for (&func, per_dt) in &cell.functions {
            for (&dt, score) in per_dt {
                let tally = summary.entry(func).or_default().entry(dt).or_default();
                let a = score.condition_a == Some(true);
                let b = score.condition_b == Some(true);
                tally.condition_a += usize::from(a);
                tally.condition_b += usize::from(b);
                tally.either += usize::from(a || b);
                tally.evaluable += usize::from(score.condition_a.is_some() || score.condition_b.is_some());
            }
        }
    }

    Ok(EvalReport {
        te: cfg.te,
        delta_ts: cfg.delta_ts.clone(),
        active_cells: cells.iter().filter(|c| c.active).map(|c| c.cell).collect(),
        cells,
        summary,
    })
}
