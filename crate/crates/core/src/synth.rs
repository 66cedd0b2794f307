//! Seeded synthetic catalogs: per-mesh Poisson (or fixed) monthly counts
//! following a schedule of phases, plus uniform background events, with
//! Gutenberg-Richter magnitudes.

use std::io::Write;

use chrono::{Duration, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::catalog::{encode_record, ColumnMap, Event};
use crate::grid::{GridSpec, Region};
use crate::time::Month;
use crate::{Error, Result};

/// Events per mesh per month for a set of meshes, given as `[row, col]`
/// relative to the scenario region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub meshes: Vec<[u32; 2]>,
    pub rate: f64,
    /// Emit exactly `round(rate)` events per mesh and month instead of
    /// drawing a Poisson count.
    #[serde(default)]
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    #[serde(default)]
    pub name: String,
    pub months: u32,
    #[serde(default)]
    pub sources: Vec<Source>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub start: Month,
    pub region: Region,
    pub grid: GridSpec,
    /// Events per month spread uniformly over `region`.
    pub background_rate: f64,
    pub b_value: f64,
    pub magnitude_floor: f64,
    pub phases: Vec<Phase>,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 0,
            start: Month::ym(1983, 1),
            region: Region::new(25.0, 125.0, 24.0, 24.0).expect("static region"),
            grid: GridSpec::default(),
            background_rate: 0.0,
            b_value: 1.0,
            magnitude_floor: 2.0,
            phases: Vec::new(),
        }
    }
}

const MAX_TENTHS: i64 = 99;

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        self.grid.validate()?;
        let (rows, cols) = self.grid.dims(&self.region);
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::Config(format!("background rate {} must be ≥ 0", self.background_rate)));
        }
        if !(self.b_value > 0.0 && self.b_value.is_finite()) {
            return Err(Error::Config(format!("b-value {} must be positive", self.b_value)));
        }
        if !(0.0..=9.9).contains(&self.magnitude_floor) {
            return Err(Error::Config(format!("magnitude floor {} outside 0.0..=9.9", self.magnitude_floor)));
        }
        for phase in &self.phases {
            for src in &phase.sources {
                if !(src.rate >= 0.0 && src.rate.is_finite()) {
                    return Err(Error::Config(format!("phase {:?}: rate {} must be ≥ 0", phase.name, src.rate)));
                }
                if let Some([r, c]) = src.meshes.iter().find(|[r, c]| *r as usize >= rows || *c as usize >= cols) {
                    return Err(Error::Config(format!(
                        "phase {:?}: mesh [{r}, {c}] outside the {rows}×{cols} grid",
                        phase.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn total_months(&self) -> u32 {
        self.phases.iter().map(|p| p.months).sum()
    }

    pub fn end(&self) -> Month {
        self.start.plus(self.total_months() as i32 - 1)
    }

    /// Phase active in month offset `k`.
    pub fn phase_at(&self, k: u32) -> Option<&Phase> {
        let mut acc = 0;
        for p in &self.phases {
            acc += p.months;
            if k < acc {
                return Some(p);
            }
        }
        None
    }

    /// Centre of mesh `[row, col]`.
    pub fn mesh_centre(&self, row: u32, col: u32) -> (f64, f64) {
        (
            self.region.x0 + (row as f64 + 0.5) * self.grid.dx,
            self.region.y0 + (col as f64 + 0.5) * self.grid.dy,
        )
    }

    /// The transition scenario: a compact cluster (a) grows (b), splits
    /// into `parts` pieces across one-mesh gaps (c), sees sparse bridging
    /// events in the gaps (d), and merges back into one cluster (e).
    /// Clusters sit in a single row starting at `origin`; each piece is
    /// `width` meshes wide.
    pub fn transition(seed: u64, origin: [u32; 2], parts: u32, width: u32, months: [u32; 5], rate: f64) -> Self {
        let [r0, c0] = origin;
        let span = parts * width + (parts - 1);
        let row = |from: u32, to: u32| (from..to).map(|c| [r0, c0 + c]).collect::<Vec<_>>();
        let pieces: Vec<[u32; 2]> = (0..span).filter(|c| (c + 1) % (width + 1) != 0).map(|c| [r0, c0 + c]).collect();
        let gaps: Vec<[u32; 2]> = (0..span).filter(|c| (c + 1) % (width + 1) == 0).map(|c| [r0, c0 + c]).collect();
        let src = |meshes: Vec<[u32; 2]>, rate: f64| Source { meshes, rate, exact: true };
        let phase = |name: &str, months: u32, sources: Vec<Source>| Phase {
            name: name.into(),
            months,
            sources,
        };
        ScenarioSpec {
            seed,
            phases: vec![
                phase("a", months[0], vec![src(row(0, width), rate)]),
                phase("b", months[1], vec![src(row(0, span), rate)]),
                phase("c", months[2], vec![src(pieces.clone(), rate)]),
                phase("d", months[3], vec![src(pieces.clone(), rate), src(gaps.clone(), 1.0)]),
                phase("e", months[4], vec![src(row(0, span), rate)]),
            ],
            ..Default::default()
        }
    }
}

/// Gutenberg-Richter magnitude in tenths, rounded down to the catalog
/// resolution.
fn gr_tenths(rng: &mut ChaCha8Rng, floor_tenths: i64, b_value: f64) -> i64 {
    let u: f64 = rng.gen::<f64>();
    let excess = -(1.0 - u).ln() / (b_value * std::f64::consts::LN_10);
    (floor_tenths + (excess * 10.0).floor() as i64).min(MAX_TENTHS)
}

fn snap_angle(v: f64) -> f64 {
    (v * 6000.0).round() / 6000.0
}

fn random_time(rng: &mut ChaCha8Rng, month: Month) -> NaiveDateTime {
    let start = month.start();
    let centis_in_month = (month.plus(1).start() - start).num_milliseconds() / 10;
    start + Duration::milliseconds(rng.gen_range(0..centis_in_month) * 10)
}

fn draw_count(rng: &mut ChaCha8Rng, src: &Source) -> u64 {
    if src.exact {
        return src.rate.round() as u64;
    }
    if src.rate <= 0.0 {
        return 0;
    }
    Poisson::new(src.rate).expect("validated rate").sample(rng) as u64
}

/// Events of the scenario, sorted by time. Identical for identical specs.
pub fn generate(spec: &ScenarioSpec) -> Result<Vec<Event>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let floor = (spec.magnitude_floor * 10.0).round() as i64;
    let background = (spec.background_rate > 0.0).then(|| Poisson::new(spec.background_rate).expect("validated rate"));
    let mut events = Vec::new();
    let mut emit = |rng: &mut ChaCha8Rng, month: Month, lat: f64, lon: f64| {
        let tenths = gr_tenths(rng, floor, spec.b_value);
        events.push(Event {
            time: random_time(rng, month),
            lat: snap_angle(lat),
            lon: snap_angle(lon),
            depth: Some(10.0),
            magnitude: tenths as f64 / 10.0,
            lat_err: None,
            lon_err: None,
            time_err: None,
        });
    };

    let mut k = 0u32;
    for phase in &spec.phases {
        for _ in 0..phase.months {
            let month = spec.start.plus(k as i32);
            for src in &phase.sources {
                for &[r, c] in &src.meshes {
                    let (lat, lon) = spec.mesh_centre(r, c);
                    for _ in 0..draw_count(&mut rng, src) {
                        emit(&mut rng, month, lat, lon);
                    }
                }
            }
            if let Some(bg) = &background {
                for _ in 0..bg.sample(&mut rng) as u64 {
                    let lat = rng.gen_range(spec.region.x0..spec.region.x1());
                    let lon = rng.gen_range(spec.region.y0..spec.region.y1());
                    emit(&mut rng, month, lat, lon);
                }
            }
            k += 1;
        }
    }
    events.sort_by_key(|e| e.time);
    Ok(events)
}

pub fn write_jma<W: Write>(events: &[Event], map: &ColumnMap, mut out: W) -> Result<()> {
    for ev in events {
        let line = encode_record(ev, map)?;
        writeln!(out, "{line}").map_err(|e| Error::io("<jma>", e))?;
    }
    Ok(())
}
