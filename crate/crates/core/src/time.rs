//! Calendar months and analysis windows.
//!
//! All series in the crate are indexed by calendar-aligned windows. A
//! [`Month`] is a count of months since year 0, which makes window arithmetic
//! plain integer arithmetic.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// A calendar month, stored as `year * 12 + (month - 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month(i32);

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Config(format!("month {month} out of range 1..=12")));
        }
        Ok(Month(year * 12 + month as i32 - 1))
    }

    /// Panicking constructor for literals in code and tests.
    pub fn ym(year: i32, month: u32) -> Self {
        Self::new(year, month).expect("valid month literal")
    }

    pub fn of(time: &NaiveDateTime) -> Self {
        Month(time.year() * 12 + time.month0() as i32)
    }

    pub fn year(self) -> i32 {
        self.0.div_euclid(12)
    }

    pub fn month(self) -> u32 {
        self.0.rem_euclid(12) as u32 + 1
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn plus(self, months: i32) -> Self {
        Month(self.0 + months)
    }

    /// Signed number of months from `earlier` to `self`.
    pub fn since(self, earlier: Month) -> i32 {
        self.0 - earlier.0
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year(), self.month(), 1).expect("month start is a valid date")
    }

    pub fn start(self) -> NaiveDateTime {
        self.first_day().and_hms_opt(0, 0, 0).expect("midnight")
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl FromStr for Month {
    type Err = Error;

    /// Accepts `YYYY-MM` or `YYYY-MM-01`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse month {s:?}, expected YYYY-MM"));
        let mut parts = s.trim().split('-');
        let year = parts.next().ok_or_else(bad)?.parse::<i32>().map_err(|_| bad())?;
        let month = parts.next().ok_or_else(bad)?.parse::<u32>().map_err(|_| bad())?;
        if let Some(day) = parts.next() {
            if day != "01" && day != "1" {
                return Err(bad());
            }
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        Month::new(year, month)
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowLength {
    #[default]
    Month,
    Year,
}

impl WindowLength {
    pub fn months(self) -> i32 {
        match self {
            WindowLength::Month => 1,
            WindowLength::Year => 12,
        }
    }
}

impl FromStr for WindowLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "month" | "monthly" | "1m" => Ok(WindowLength::Month),
            "year" | "yearly" | "1y" => Ok(WindowLength::Year),
            other => Err(Error::Config(format!("unknown window length {other:?}"))),
        }
    }
}

/// Half-open window `[start, start + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Month,
    pub len: WindowLength,
}

impl TimeWindow {
    pub fn end(&self) -> Month {
        self.start.plus(self.len.months())
    }

    pub fn contains(&self, month: Month) -> bool {
        month >= self.start && month < self.end()
    }

    /// Windows tiling `[first, last]` (both months inclusive). A yearly tiling
    /// starts at `first` and steps by twelve months; the final window may
    /// extend past `last`.
    pub fn tiling(first: Month, last: Month, len: WindowLength) -> Vec<TimeWindow> {
        let step = len.months();
        let mut out = Vec::new();
        let mut start = first;
        while start <= last {
            out.push(TimeWindow { start, len });
            start = start.plus(step);
        }
        out
    }
}

/// Maps months onto indices of a contiguous tiling.
#[derive(Clone, Debug)]
pub struct WindowIndex {
    first: Month,
    len: WindowLength,
    count: usize,
}

impl WindowIndex {
    pub fn new(windows: &[TimeWindow]) -> Result<Self> {
        let first = windows
            .first()
            .ok_or_else(|| Error::Series("empty window list".into()))?;
        for (k, w) in windows.iter().enumerate() {
            if w.len != first.len || w.start != first.start.plus(k as i32 * first.len.months()) {
                return Err(Error::Series(format!(
                    "windows are not a contiguous tiling at position {k} ({})",
                    w.start
                )));
            }
        }
        Ok(WindowIndex {
            first: first.start,
            len: first.len,
            count: windows.len(),
        })
    }

    pub fn of(&self, month: Month) -> Option<usize> {
        let offset = month.since(self.first);
        if offset < 0 {
            return None;
        }
        let idx = (offset / self.len.months()) as usize;
        (idx < self.count).then_some(idx)
    }
}
