//! Precursor alarms on RESI, the activity index and high-activity marks.

use serde::{Deserialize, Serialize};

use crate::entropy::ResiPoint;
use crate::time::{Month, WindowLength};
use crate::{Error, Result};

/// Logarithmic base of the JMA magnitude–energy relation used by activity.
pub const ACTIVITY_BASE: f64 = 31.62;

/// Relative slack under which two averaged RESI values rank as a tie, so
/// that rounding in the trailing mean does not split equal values.
pub const RANK_TIE_TOLERANCE: f64 = 1e-12;

/// How the rank threshold `γ · min(T, t - t0)` is measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankUnits {
    /// `min(T, t - t0)` in years: a full 28-year window admits ranks ≤ 2.8.
    #[default]
    Years,
    /// γ times the number of defined samples in the rank window.
    Samples,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlarmConfig {
    /// T, the cap on the rank window, in years.
    pub rank_window_years: f64,
    /// dt, the stdev window, in months.
    pub dt_months: u32,
    pub gamma: f64,
    pub theta_std: f64,
    /// Start of the data; rank windows never reach before it.
    pub t0: Month,
    /// Alarms are only raised once `t - t0` reaches this many years.
    pub warmup_years: f64,
    pub rank_units: RankUnits,
    /// Rank and stdev windows with fewer defined points raise no alarm.
    pub min_defined: usize,
}

impl Default for AlarmConfig {
    fn default() -> Self {
        AlarmConfig {
            rank_window_years: 28.0,
            dt_months: 12,
            gamma: 0.1,
            theta_std: 0.5,
            t0: Month::ym(1983, 1),
            warmup_years: 3.0,
            rank_units: RankUnits::Years,
            min_defined: 3,
        }
    }
}

impl AlarmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rank_window_years >= self.warmup_years && self.warmup_years >= 0.0) {
            return Err(Error::Config(format!(
                "rank window T={} must be at least the warm-up {}",
                self.rank_window_years, self.warmup_years
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.theta_std.is_nan() || self.theta_std <= 0.0 {
            return Err(Error::Config(format!("theta_std must be positive, got {}", self.theta_std)));
        }
        if self.dt_months < 2 {
            return Err(Error::Config("dt must span at least two months".into()));
        }
        Ok(())
    }

    fn months(years: f64) -> i32 {
        (years * 12.0).round() as i32
    }

    /// First window start at which alarms can be raised.
    pub fn first_alarm_month(&self) -> Month {
        self.t0.plus(Self::months(self.warmup_years))
    }
}

/// Population standard deviation.
pub fn pstdev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn defined_hr(series: &[ResiPoint], lo: usize, hi: usize) -> Vec<f64> {
    series[lo..=hi].iter().filter_map(ResiPoint::defined_hr).collect()
}

/// `Hr_sat(S,t)` for the point at index `k`: `Hr(S,t)` when the rank and the
/// saturation/perturbation conditions both hold, else 0.
///
/// The series must be a contiguous tiling of monthly or yearly windows with
/// `hr_avr` filled in.
pub fn hr_sat(series: &[ResiPoint], cfg: &AlarmConfig, k: usize) -> f64 {
    let Some(point) = series.get(k) else { return 0.0 };
    if point.no_data {
        return 0.0;
    }
    let step = point.window.len.months();
    let t = point.window.start;
    let elapsed = t.since(cfg.t0);
    if elapsed < AlarmConfig::months(cfg.warmup_years) {
        return 0.0;
    }

    // rank of Hr_avr(t) over [t - min(T, t - t0), t]
    let span = AlarmConfig::months(cfg.rank_window_years).min(elapsed);
    let lo = k.saturating_sub((span / step) as usize);
    let key = |p: &ResiPoint| match p.window.len {
        WindowLength::Month => p.hr_avr,
        WindowLength::Year => p.defined_hr(),
    };
    let Some(target) = key(point) else { return 0.0 };
    let ranked: Vec<f64> = series[lo..=k].iter().filter_map(key).collect();
    if ranked.len() < cfg.min_defined {
        return 0.0;
    }
    let tie = RANK_TIE_TOLERANCE * target.abs().max(1.0);
    let rank = 1 + ranked.iter().filter(|&&v| v > target + tie).count();
    let threshold = match cfg.rank_units {
        RankUnits::Years => cfg.gamma * (span as f64 / 12.0),
        RankUnits::Samples => cfg.gamma * ranked.len() as f64,
    };
    if rank as f64 > threshold + 1e-9 {
        return 0.0;
    }

    let settled = match point.window.len {
        WindowLength::Month => {
            let dt = cfg.dt_months as usize;
            if k < dt {
                return 0.0;
            }
            let full = defined_hr(series, k - dt, k);
            if full.len() < cfg.min_defined {
                return 0.0;
            }
            let saturated = pstdev(&full) < cfg.theta_std;
            let recent = defined_hr(series, k - dt / 2, k);
            let older = defined_hr(series, k - dt, k - dt / 2 - 1);
            let perturbed = recent.len() >= cfg.min_defined
                && older.len() >= cfg.min_defined
                && pstdev(&recent) > 2.0 * pstdev(&older);
            saturated || perturbed
        }
        WindowLength::Year => {
            let back = (cfg.dt_months as usize / 12).max(1);
            match k.checked_sub(back).and_then(|j| series[j].defined_hr()) {
                Some(prev) => (point.hr - prev).abs() < cfg.theta_std,
                None => false,
            }
        }
    };
    if settled {
        point.hr
    } else {
        0.0
    }
}

pub fn hr_sat_series(series: &[ResiPoint], cfg: &AlarmConfig) -> Vec<f64> {
    (0..series.len()).map(|k| hr_sat(series, cfg, k)).collect()
}

pub fn high_hr(hr_sat: &[f64]) -> Vec<bool> {
    hr_sat.iter().map(|&v| v > 0.0).collect()
}

/// `log_31.62 Σ 31.62^M`, the magnitude equivalent of the summed energy.
/// `None` when there are no events.
pub fn activity(magnitudes: &[f64]) -> Option<f64> {
    let max = magnitudes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let ln_base = ACTIVITY_BASE.ln();
    let sum: f64 = magnitudes.iter().map(|m| ((m - max) * ln_base).exp()).sum();
    Some(max + sum.ln() / ln_base)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActivityPoint {
    pub cell: usize,
    pub window_start: Month,
    pub activity: Option<f64>,
    pub high: bool,
}

/// Marks windows whose activity exceeds mean + stdev of the whole series and
/// is strictly larger than every defined value in the preceding two years.
/// `step_months` is the window length of the series.
pub fn high_activity(series: &[Option<f64>], step_months: i32) -> Vec<bool> {
    let defined: Vec<f64> = series.iter().flatten().copied().collect();
    if defined.is_empty() {
        return vec![false; series.len()];
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let bar = mean + pstdev(&defined);
    let lookback = (24 / step_months.max(1)) as usize;
    series
        .iter()
        .enumerate()
        .map(|(k, a)| match a {
            Some(v) if *v > bar => series[k.saturating_sub(lookback)..k]
                .iter()
                .flatten()
                .all(|prev| prev < v),
            _ => false,
        })
        .collect()
}
