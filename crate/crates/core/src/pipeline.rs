//! End-to-end run over one catalog: per-cell RESI series, alarms, activity,
//! baselines and the evaluation report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alarms::{activity, high_activity, high_hr, hr_sat_series, AlarmConfig};
use crate::baselines::{high_topn, pi_series, ri_series, CellCounts, PiConfig, RiConfig};
use crate::catalog::{filter_events, CatalogFilter, Event};
use crate::entropy::{resi_series, LogBase, ResiPoint};
use crate::evaluation::{active_cells, evaluate_all, AlarmFunction, CellInputs, EvalConfig, EvalReport};
use crate::grid::{bin_events, CellLayout, GridSpec, MeshWindowCounts, Region};
use crate::time::{Month, TimeWindow, WindowIndex, WindowLength};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub universe: Region,
    pub cell_len: f64,
    /// Mesh size, quaking threshold and the magnitude cutoff M0.
    pub grid: GridSpec,
    pub window: WindowLength,
    /// First and last month of data.
    pub first: Month,
    pub last: Month,
    pub log_base: LogBase,
    pub alarms: AlarmConfig,
    pub pi: PiConfig,
    pub ri: RiConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            universe: Region::new(25.0, 125.0, 24.0, 24.0).expect("static region"),
            cell_len: 4.0,
            grid: GridSpec::default(),
            window: WindowLength::Month,
            first: Month::ym(1983, 1),
            last: Month::ym(2017, 3),
            log_base: LogBase::E,
            alarms: AlarmConfig::default(),
            pi: PiConfig::default(),
            ri: RiConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    /// Every problem with the configuration, not just the first.
    pub fn problems(&self) -> Vec<Error> {
        let mut out = Vec::new();
        let checks = [
            self.universe.validate(),
            self.grid.validate(),
            CellLayout::new(self.universe, self.cell_len).map(|_| ()),
            self.alarms.validate(),
            self.pi.validate(),
            self.eval.validate(),
        ];
        out.extend(checks.into_iter().filter_map(|r| r.err()));
        if self.first > self.last {
            out.push(Error::Config(format!("data period {}..{} is empty", self.first, self.last)));
        }
        if self.window == WindowLength::Year && self.first.month() != 1 {
            out.push(Error::Config("yearly windows must start in January".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn filter(&self) -> CatalogFilter {
        CatalogFilter {
            m0: self.grid.m_theta,
            region: self.universe,
            t_start: self.first.start(),
            t_end: self.last.plus(1).start() - chrono::Duration::milliseconds(10),
        }
    }

    pub fn windows(&self) -> Vec<TimeWindow> {
        TimeWindow::tiling(self.first, self.last, self.window)
    }

    pub fn months(&self) -> usize {
        (self.last.since(self.first) + 1) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub cell: usize,
    pub region: Region,
    pub series: Vec<ResiPoint>,
    pub hr_sat: Vec<f64>,
    pub high_hr: Vec<bool>,
    pub activity: Vec<Option<f64>>,
    pub high_activity: Vec<bool>,
}

/// Monthly baseline values and their top-n alarms, `[cell][month]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Baselines {
    pub start: Month,
    pub pi: Vec<Vec<Option<f64>>>,
    pub ri: Vec<Vec<Option<f64>>>,
    pub high_pi: Vec<Vec<bool>>,
    pub high_ri: Vec<Vec<bool>>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub layout: CellLayout,
    pub windows: Vec<TimeWindow>,
    pub events_used: usize,
    pub cells: Vec<CellResult>,
    pub active: Vec<bool>,
    /// Present for monthly runs only.
    pub baselines: Option<Baselines>,
    pub report: Option<EvalReport>,
}

/// Per-window, per-cell mesh counts. `result[window][cell]`.
pub fn cell_window_counts(
    events: &[Event],
    layout: &CellLayout,
    spec: &GridSpec,
    windows: &[TimeWindow],
) -> Result<Vec<Vec<MeshWindowCounts>>> {
    let binned = bin_events(events, &layout.universe, spec, windows)?;
    binned.par_iter().map(|c| layout.split(c, spec)).collect()
}

/// RESI series per cell from per-window cell counts.
pub fn resi_by_cell(per_window: &[Vec<MeshWindowCounts>], cells: usize, spec: &GridSpec, base: LogBase) -> Vec<Vec<ResiPoint>> {
    (0..cells)
        .into_par_iter()
        .map(|cell| {
            let counts: Vec<MeshWindowCounts> = per_window.iter().map(|w| w[cell].clone()).collect();
            resi_series(cell, &counts, spec, base)
        })
        .collect()
}

fn magnitudes_by_cell(events: &[Event], layout: &CellLayout, windows: &[TimeWindow]) -> Result<Vec<Vec<Vec<f64>>>> {
    let index = WindowIndex::new(windows)?;
    let mut out = vec![vec![Vec::new(); windows.len()]; layout.len()];
    for ev in events {
        if let (Some(cell), Some(k)) = (layout.cell_of(ev.lat, ev.lon), index.of(ev.month())) {
            out[cell][k].push(ev.magnitude);
        }
    }
    Ok(out)
}

/// Values of `f` outside `[from, to]` (axis indices) are dropped before the
/// top-n selection.
fn topn_in_range(f: &[Option<f64>], from: usize, to: usize, alarms: usize, t_hr: usize) -> Vec<bool> {
    let clipped: Vec<Option<f64>> = f
        .iter()
        .enumerate()
        .map(|(k, v)| if k >= from && k <= to { *v } else { None })
        .collect();
    high_topn(&clipped, alarms, to + 1 - from, t_hr)
}

fn axis_offset(m: Month, start: Month, months: usize) -> Option<usize> {
    let k = m.since(start);
    (k >= 0 && (k as usize) < months).then_some(k as usize)
}

pub fn run_pipeline(events: &[Event], cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let layout = CellLayout::new(cfg.universe, cfg.cell_len)?;
    let events = filter_events(events, &cfg.filter());
    let windows = cfg.windows();
    let step = cfg.window.months();

    let per_window = cell_window_counts(&events, &layout, &cfg.grid, &windows)?;
    let series = resi_by_cell(&per_window, layout.len(), &cfg.grid, cfg.log_base);
    drop(per_window);
    let magnitudes = magnitudes_by_cell(&events, &layout, &windows)?;

    let cells: Vec<CellResult> = series
        .into_par_iter()
        .zip(magnitudes.into_par_iter())
        .enumerate()
        .map(|(cell, (series, mags))| {
            let hr_sat = hr_sat_series(&series, &cfg.alarms);
            let activity: Vec<Option<f64>> = mags.iter().map(|m| activity(m)).collect();
            CellResult {
                cell,
                region: layout.cells[cell],
                high_hr: high_hr(&hr_sat),
                high_activity: high_activity(&activity, step),
                activity,
                hr_sat,
                series,
            }
        })
        .collect();

    let months = cfg.months();
    let m0_counts = CellCounts::from_events(&events, &layout, cfg.first, months, cfg.grid.m_theta);
    let active = active_cells(&m0_counts);

    if cfg.window != WindowLength::Month {
        return Ok(RunOutput {
            layout,
            windows,
            events_used: events.len(),
            cells,
            active,
            baselines: None,
            report: None,
        });
    }

    let pi_counts = if cfg.pi.cutoff == cfg.grid.m_theta {
        m0_counts.clone()
    } else {
        CellCounts::from_events(&events, &layout, cfg.first, months, cfg.pi.cutoff)
    };
    let ri_counts = if cfg.ri.cutoff == cfg.grid.m_theta {
        m0_counts
    } else {
        CellCounts::from_events(&events, &layout, cfg.first, months, cfg.ri.cutoff)
    };
    let pi = pi_series(&pi_counts, &cfg.pi);
    let ri = ri_series(&ri_counts, &layout, &cfg.ri);

    let te = axis_offset(cfg.eval.te, cfg.first, months).unwrap_or(months - 1);
    let start_of = |f: AlarmFunction| axis_offset(cfg.eval.start(f), cfg.first, months).unwrap_or(0).min(te);
    let hr_from = start_of(AlarmFunction::HrSat);
    let t_hr = te + 1 - hr_from;
    let mut high_pi = Vec::with_capacity(layout.len());
    let mut high_ri = Vec::with_capacity(layout.len());
    for cell in &cells {
        let m = cell.high_hr[hr_from..=te].iter().filter(|&&b| b).count();
        high_pi.push(topn_in_range(&pi[cell.cell], start_of(AlarmFunction::Pi), te, m, t_hr));
        high_ri.push(topn_in_range(&ri[cell.cell], start_of(AlarmFunction::Ri), te, m, t_hr));
    }

    let inputs: Vec<CellInputs> = cells
        .iter()
        .map(|c| {
            let alarms: BTreeMap<AlarmFunction, Vec<bool>> = [
                (AlarmFunction::HrSat, c.high_hr.clone()),
                (AlarmFunction::Pi, high_pi[c.cell].clone()),
                (AlarmFunction::Ri, high_ri[c.cell].clone()),
            ]
            .into_iter()
            .collect();
            CellInputs {
                cell: c.cell,
                axis_start: cfg.first,
                high_activity: c.high_activity.clone(),
                alarms,
            }
        })
        .collect();
    let report = evaluate_all(&inputs, &active, &cfg.eval)?;

    Ok(RunOutput {
        layout,
        windows,
        events_used: events.len(),
        cells,
        active,
        baselines: Some(Baselines {
            start: cfg.first,
            pi,
            ri,
            high_pi,
            high_ri,
        }),
        report: Some(report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ScenarioSpec};

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        assert!(cfg.problems().is_empty());
        assert_eq!(cfg.windows().len(), 411);
        assert_eq!(cfg.months(), 411);
    }

    #[test]
    fn problems_are_collected() {
        let mut cfg = RunConfig::default();
        cfg.cell_len = 3.7;
        cfg.alarms.gamma = 0.0;
        cfg.first = Month::ym(2020, 1);
        assert_eq!(cfg.problems().len(), 3);
    }

    #[test]
    fn empty_catalog_runs() {
        let out = run_pipeline(&[], &RunConfig::default()).unwrap();
        assert_eq!(out.cells.len(), 36);
        assert!(out.cells.iter().all(|c| c.series.iter().all(|p| p.no_data)));
        let report = out.report.unwrap();
        assert!(report.active_cells.is_empty());
        for cell in &report.cells {
            for per_dt in cell.functions.values() {
                assert!(per_dt.values().all(|s| s.condition_a.is_none() && s.condition_b.is_none()));
            }
        }
    }

    #[test]
    fn yearly_run_skips_baselines() {
        let mut spec = ScenarioSpec::default();
        spec.background_rate = 50.0;
        spec.phases.push(crate::synth::Phase {
            name: "bg".into(),
            months: 48,
            sources: vec![],
        });
        let events = generate(&spec).unwrap();
        let cfg = RunConfig {
            window: WindowLength::Year,
            last: Month::ym(1986, 12),
            ..Default::default()
        };
        let out = run_pipeline(&events, &cfg).unwrap();
        assert_eq!(out.windows.len(), 4);
        assert!(out.baselines.is_none() && out.report.is_none());
        assert_eq!(out.events_used, events.len());
    }
}
