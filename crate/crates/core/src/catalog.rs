//! JMA hypocenter records: parsing, encoding, filtering and CSV I/O.
//!
//! The default [`ColumnMap`] follows the JMA fixed-width layout (1-based
//! columns):
//!
//! | field        | columns | encoding                         |
//! |--------------|---------|----------------------------------|
//! | record type  | 1       | `J`                              |
//! | date, time   | 2-13    | `YYYYMMDDhhmm`                   |
//! | seconds      | 14-17   | F4.2                             |
//! | time error   | 18-21   | F4.2 seconds                     |
//! | latitude     | 22-28   | I3 degrees + F4.2 minutes        |
//! | lat. error   | 29-32   | F4.2 minutes                     |
//! | longitude    | 33-40   | I4 degrees + F4.2 minutes        |
//! | lon. error   | 41-44   | F4.2 minutes                     |
//! | depth        | 45-49   | F5.2 km                          |
//! | magnitude    | 53-54   | two digits `xy` = x.y            |
//!
//! Fixed-point fields are decoded to scaled integers first so that decoding
//! and re-encoding never drift. Trailing blanks in the fractional part mean
//! the catalog reported fewer decimals; they decode as zeros.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Region;
use crate::time::Month;
use crate::{Error, Result};

/// One catalog record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: NaiveDateTime,
    pub lat: f64,
    pub lon: f64,
    /// Parsed and kept, never used by the entropy math.
    pub depth: Option<f64>,
    pub magnitude: f64,
    pub lat_err: Option<f64>,
    pub lon_err: Option<f64>,
    pub time_err: Option<f64>,
}

impl Event {
    pub fn month(&self) -> Month {
        Month::of(&self.time)
    }

    /// Magnitude in tenths, the catalog's native resolution.
    pub fn magnitude_tenths(&self) -> i32 {
        (self.magnitude * 10.0).round() as i32
    }
}

/// A 1-based, inclusive column span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub start: usize,
    pub width: usize,
}

impl Field {
    pub const fn new(start: usize, width: usize) -> Self {
        Field { start, width }
    }

    fn end(&self) -> usize {
        self.start + self.width - 1
    }

    fn slice<'a>(&self, line: &'a [u8]) -> &'a [u8] {
        let lo = (self.start - 1).min(line.len());
        let hi = self.end().min(line.len());
        &line[lo..hi]
    }
}

/// Column layout of a catalog vintage. Overridable from configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub record_types: Vec<char>,
    pub record_type: Field,
    pub year: Field,
    pub month: Field,
    pub day: Field,
    pub hour: Field,
    pub minute: Field,
    /// Seconds with two implied decimals.
    pub second: Field,
    pub time_err: Field,
    /// Degrees followed by four minute digits (two implied decimals).
    pub lat: Field,
    pub lat_err: Field,
    pub lon: Field,
    pub lon_err: Field,
    /// Kilometres with two implied decimals.
    pub depth: Field,
    pub magnitude: Field,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            record_types: vec!['J'],
            record_type: Field::new(1, 1),
            year: Field::new(2, 4),
            month: Field::new(6, 2),
            day: Field::new(8, 2),
            hour: Field::new(10, 2),
            minute: Field::new(12, 2),
            second: Field::new(14, 4),
            time_err: Field::new(18, 4),
            lat: Field::new(22, 7),
            lat_err: Field::new(29, 4),
            lon: Field::new(33, 8),
            lon_err: Field::new(41, 4),
            depth: Field::new(45, 5),
            magnitude: Field::new(53, 2),
        }
    }
}

impl ColumnMap {
    fn fields(&self) -> [Field; 14] {
        [
            self.record_type,
            self.year,
            self.month,
            self.day,
            self.hour,
            self.minute,
            self.second,
            self.time_err,
            self.lat,
            self.lat_err,
            self.lon,
            self.lon_err,
            self.depth,
            self.magnitude,
        ]
    }

    /// Shortest acceptable record: through the last column of every field
    /// the parser requires (time, epicenter and magnitude).
    pub fn min_len(&self) -> usize {
        [
            self.record_type,
            self.year,
            self.month,
            self.day,
            self.hour,
            self.minute,
            self.second,
            self.lat,
            self.lon,
            self.magnitude,
        ]
        .iter()
        .map(Field::end)
        .max()
        .unwrap_or(0)
    }

    pub fn record_len(&self) -> usize {
        self.fields().iter().map(Field::end).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        for f in self.fields() {
            if f.start == 0 || f.width == 0 {
                return Err(Error::Config(format!("column field {f:?} must be 1-based and non-empty")));
            }
        }
        if self.lat.width < 5 || self.lon.width < 5 {
            return Err(Error::Config("latitude/longitude fields need degree digits plus four minute digits".into()));
        }
        if self.record_types.is_empty() {
            return Err(Error::Config("at least one record type marker is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("record has {len} columns, at least {need} required")]
    TooShort { len: usize, need: usize },
    #[error("unexpected record type {0:?}")]
    RecordType(String),
    #[error("malformed date/time: {0}")]
    DateTime(String),
    #[error("non-numeric magnitude field {0:?}")]
    Magnitude(String),
    #[error("non-numeric {field} field {text:?}")]
    Number { field: &'static str, text: String },
    #[error("{0}")]
    OutOfRange(String),
}

/// A rejected record, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

/// Decodes a fixed-point field to `value * 10^decimals`. Blank → `None`.
fn decode_scaled(bytes: &[u8], decimals: usize, field: &'static str) -> Result<Option<i64>, ParseErrorKind> {
    let bad = || ParseErrorKind::Number {
        field,
        text: text(bytes),
    };
    if bytes.iter().all(|b| *b == b' ') {
        return Ok(None);
    }
    let split = bytes.len().saturating_sub(decimals);
    let (int_part, frac_part) = bytes.split_at(split);
    let int_str = std::str::from_utf8(int_part).map_err(|_| bad())?.trim();
    let frac_str = std::str::from_utf8(frac_part).map_err(|_| bad())?.trim_end();
    let (negative, digits) = match int_str.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, int_str),
    };
    if !digits.bytes().all(|b| b.is_ascii_digit()) || !frac_str.bytes().all(|b| b.is_ascii_digit() || b == b' ') {
        return Err(bad());
    }
    let int_val: i64 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let mut frac_val: i64 = 0;
    for (k, b) in frac_str.bytes().enumerate() {
        let digit = if b == b' ' { 0 } else { (b - b'0') as i64 };
        frac_val += digit * 10i64.pow((decimals - 1 - k) as u32);
    }
    let magnitude = int_val * 10i64.pow(decimals as u32) + frac_val;
    Ok(Some(if negative { -magnitude } else { magnitude }))
}

fn decode_int(bytes: &[u8], field: &'static str) -> Result<i64, ParseErrorKind> {
    decode_scaled(bytes, 0, field)?.ok_or(ParseErrorKind::DateTime(format!("{field} is blank")))
}

/// Degrees + minutes (hundredths) → value in 1/6000 degree units.
fn decode_angle(bytes: &[u8], field: &'static str) -> Result<i64, ParseErrorKind> {
    let bad = || ParseErrorKind::Number {
        field,
        text: text(bytes),
    };
    let split = bytes.len() - 4;
    let (deg_part, min_part) = bytes.split_at(split);
    let deg_str = std::str::from_utf8(deg_part).map_err(|_| bad())?.trim();
    let (negative, deg_digits) = match deg_str.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, deg_str),
    };
    if deg_digits.is_empty() || !deg_digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let deg: i64 = deg_digits.parse().map_err(|_| bad())?;
    let minutes = decode_scaled(min_part, 2, field)?.unwrap_or(0);
    if !(0..6000).contains(&minutes) {
        return Err(ParseErrorKind::OutOfRange(format!("{field} minutes {} out of range", text(min_part))));
    }
    let units = deg * 6000 + minutes;
    Ok(if negative { -units } else { units })
}

/// Two-character magnitude: `xy` = x.y, `-y` = -0.y, `Ay`/`By`/`Cy` =
/// -1.y/-2.y/-3.y. Returns tenths.
fn decode_magnitude(bytes: &[u8]) -> Result<i32, ParseErrorKind> {
    let bad = || ParseErrorKind::Magnitude(text(bytes));
    if bytes.len() != 2 {
        return Err(bad());
    }
    let second = bytes[1];
    if !second.is_ascii_digit() {
        return Err(bad());
    }
    let y = (second - b'0') as i32;
    match bytes[0] {
        b'0'..=b'9' => Ok((bytes[0] - b'0') as i32 * 10 + y),
        b' ' => Ok(y),
        b'-' => Ok(-y),
        b'A' => Ok(-(10 + y)),
        b'B' => Ok(-(20 + y)),
        b'C' => Ok(-(30 + y)),
        _ => Err(bad()),
    }
}

fn encode_magnitude(tenths: i32) -> Option<String> {
    match tenths {
        0..=99 => Some(format!("{tenths:02}")),
        -9..=-1 => Some(format!("-{}", -tenths)),
        -19..=-10 => Some(format!("A{}", -tenths - 10)),
        -29..=-20 => Some(format!("B{}", -tenths - 20)),
        -39..=-30 => Some(format!("C{}", -tenths - 30)),
        _ => None,
    }
}

/// Parses one fixed-width record. `line_no` is 1-based and only used for
/// error reporting.
pub fn parse_record(line: &str, line_no: usize, map: &ColumnMap) -> Result<Event, ParseError> {
    parse_bytes(line.as_bytes(), line_no, map)
}

fn parse_bytes(line: &[u8], line_no: usize, map: &ColumnMap) -> Result<Event, ParseError> {
    decode_record(line, map).map_err(|kind| ParseError { line: line_no, kind })
}

fn decode_record(line: &[u8], map: &ColumnMap) -> Result<Event, ParseErrorKind> {
    let need = map.min_len();
    if line.len() < need {
        return Err(ParseErrorKind::TooShort { len: line.len(), need });
    }
    let marker = map.record_type.slice(line);
    let marker_ok = marker.len() == 1 && map.record_types.iter().any(|c| (*c as u32) == marker[0] as u32);
    if !marker_ok {
        return Err(ParseErrorKind::RecordType(text(marker)));
    }

    let year = decode_int(map.year.slice(line), "year")?;
    let month = decode_int(map.month.slice(line), "month")?;
    let day = decode_int(map.day.slice(line), "day")?;
    let hour = decode_int(map.hour.slice(line), "hour")?;
    let minute = decode_int(map.minute.slice(line), "minute")?;
    let centis = decode_scaled(map.second.slice(line), 2, "second")
        .map_err(|e| ParseErrorKind::DateTime(e.to_string()))?
        .ok_or_else(|| ParseErrorKind::DateTime("seconds are blank".into()))?;
    let date = NaiveDate::from_ymd_opt(year as i32, month as u32, day as u32)
        .ok_or_else(|| ParseErrorKind::DateTime(format!("{year:04}-{month:02}-{day:02} is not a date")))?;
    if !(0..24).contains(&hour) || !(0..60).contains(&minute) || !(0..6100).contains(&centis) {
        return Err(ParseErrorKind::DateTime(format!(
            "{hour:02}:{minute:02}:{:05.2} is not a time",
            centis as f64 / 100.0
        )));
    }
    let time = date.and_hms_opt(hour as u32, minute as u32, 0).expect("validated") + Duration::milliseconds(centis * 10);

    let lat = decode_angle(map.lat.slice(line), "latitude")? as f64 / 6000.0;
    let mut lon = decode_angle(map.lon.slice(line), "longitude")? as f64 / 6000.0;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(ParseErrorKind::OutOfRange(format!("latitude {lat} outside [-90, 90]")));
    }
    if !(-180.0..=360.0).contains(&lon) {
        return Err(ParseErrorKind::OutOfRange(format!("longitude {lon} outside [-180, 360]")));
    }
    if lon >= 180.0 {
        lon -= 360.0;
    }

    let tenths = decode_magnitude(map.magnitude.slice(line))?;
    if !(-20..=100).contains(&tenths) {
        return Err(ParseErrorKind::OutOfRange(format!("magnitude {:.1} outside [-2.0, 10.0]", tenths as f64 / 10.0)));
    }

    let optional = |f: Field, decimals: usize, scale: f64, name: &'static str| -> Result<Option<f64>, ParseErrorKind> {
        Ok(decode_scaled(f.slice(line), decimals, name)?.map(|v| v as f64 / scale))
    };
    Ok(Event {
        time,
        lat,
        lon,
        depth: optional(map.depth, 2, 100.0, "depth")?,
        magnitude: tenths as f64 / 10.0,
        lat_err: optional(map.lat_err, 2, 6000.0, "latitude error")?,
        lon_err: optional(map.lon_err, 2, 6000.0, "longitude error")?,
        time_err: optional(map.time_err, 2, 100.0, "time error")?,
    })
}

fn put(buf: &mut [u8], f: Field, s: &str) -> Result<()> {
    if s.len() > f.width {
        return Err(Error::Config(format!("value {s:?} does not fit in {} columns", f.width)));
    }
    let end = f.end();
    let start = end - s.len();
    buf[start..end].copy_from_slice(s.as_bytes());
    Ok(())
}

fn angle_text(value: f64, deg_width: usize) -> String {
    let units = (value.abs() * 6000.0).round() as i64;
    let (deg, minutes) = (units / 6000, units % 6000);
    let deg_text = if value < 0.0 { format!("-{deg}") } else { deg.to_string() };
    format!("{deg_text:>deg_width$}{minutes:04}")
}

/// Writes `event` back into the fixed-width layout of `map`.
pub fn encode_record(event: &Event, map: &ColumnMap) -> Result<String> {
    let mut buf = vec![b' '; map.record_len()];
    let marker = map.record_types.first().copied().unwrap_or('J');
    put(&mut buf, map.record_type, &marker.to_string())?;
    let t = &event.time;
    let date = t.date();
    put(&mut buf, map.year, &format!("{:04}", chrono::Datelike::year(&date)))?;
    put(&mut buf, map.month, &format!("{:02}", chrono::Datelike::month(&date)))?;
    put(&mut buf, map.day, &format!("{:02}", chrono::Datelike::day(&date)))?;
    put(&mut buf, map.hour, &format!("{:02}", t.hour()))?;
    put(&mut buf, map.minute, &format!("{:02}", t.minute()))?;
    let centis = t.second() * 100 + t.nanosecond() / 10_000_000;
    put(&mut buf, map.second, &format!("{centis:04}"))?;
    if let Some(e) = event.time_err {
        put(&mut buf, map.time_err, &format!("{:>4}", format!("{:03}", (e * 100.0).round() as i64)))?;
    }
    put(&mut buf, map.lat, &angle_text(event.lat, map.lat.width - 4))?;
    if let Some(e) = event.lat_err {
        put(&mut buf, map.lat_err, &format!("{:>4}", (e * 6000.0).round() as i64))?;
    }
    put(&mut buf, map.lon, &angle_text(event.lon, map.lon.width - 4))?;
    if let Some(e) = event.lon_err {
        put(&mut buf, map.lon_err, &format!("{:>4}", (e * 6000.0).round() as i64))?;
    }
    if let Some(d) = event.depth {
        put(&mut buf, map.depth, &format!("{:>5}", (d * 100.0).round() as i64))?;
    }
    let mag = encode_magnitude(event.magnitude_tenths())
        .ok_or_else(|| Error::Config(format!("magnitude {} cannot be encoded", event.magnitude)))?;
    put(&mut buf, map.magnitude, &mag)?;
    Ok(String::from_utf8(buf).expect("ascii record"))
}

/// Parsed events plus every rejected line. `events.len() + rejected.len()`
/// always equals `lines`.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub events: Vec<Event>,
    pub rejected: Vec<ParseError>,
    pub lines: usize,
}

impl ParseOutcome {
    pub fn merge(&mut self, other: ParseOutcome) {
        self.events.extend(other.events);
        self.rejected.extend(other.rejected);
        self.lines += other.lines;
    }
}

/// Parses a whole catalog text in parallel. Event order follows line order.
pub fn parse_catalog(data: &[u8], map: &ColumnMap) -> ParseOutcome {
    let mut lines: Vec<&[u8]> = data.split(|b| *b == b'\n').collect();
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    let results: Vec<Result<Event, ParseError>> = lines
        .par_iter()
        .enumerate()
        .map(|(k, raw)| {
            let line = raw.strip_suffix(b"\r").unwrap_or(raw);
            parse_bytes(line, k + 1, map)
        })
        .collect();
    let mut out = ParseOutcome {
        lines: results.len(),
        ..Default::default()
    };
    for r in results {
        match r {
            Ok(ev) => out.events.push(ev),
            Err(e) => out.rejected.push(e),
        }
    }
    out
}

pub fn parse_catalog_file(path: &Path, map: &ColumnMap) -> Result<ParseOutcome> {
    let mut data = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    Ok(parse_catalog(&data, map))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogFilter {
    pub m0: f64,
    pub region: Region,
    /// Inclusive bounds.
    pub t_start: NaiveDateTime,
    pub t_end: NaiveDateTime,
}

impl Default for CatalogFilter {
    fn default() -> Self {
        CatalogFilter {
            m0: 2.0,
            region: Region {
                x0: 25.0,
                y0: 125.0,
                x_len: 24.0,
                y_len: 24.0,
            },
            t_start: Month::ym(1983, 1).start(),
            t_end: Month::ym(2017, 4).start() - Duration::milliseconds(10),
        }
    }
}

impl CatalogFilter {
    /// Accepts every event the parser can produce.
    pub fn everything() -> Self {
        CatalogFilter {
            m0: -2.0,
            region: Region::whole_earth(),
            t_start: NaiveDateTime::MIN,
            t_end: NaiveDateTime::MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        if self.t_start >= self.t_end {
            return Err(Error::Config(format!(
                "filter start {} must precede end {}",
                self.t_start, self.t_end
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, ev: &Event) -> bool {
        ev.magnitude >= self.m0
            && self.region.contains(ev.lat, ev.lon)
            && ev.time >= self.t_start
            && ev.time <= self.t_end
    }
}

/// Keeps events with magnitude ≥ m0 inside the region and time bounds.
/// Aftershocks are deliberately kept.
pub fn filter_events(events: &[Event], filter: &CatalogFilter) -> Vec<Event> {
    events.iter().filter(|e| filter.accepts(e)).cloned().collect()
}

pub const EVENT_CSV_HEADER: [&str; 5] = ["time_utc", "lat_deg", "lon_deg", "depth_km", "mag"];

pub fn format_time(t: &NaiveDateTime) -> String {
    let centis = t.nanosecond() / 10_000_000;
    format!("{}.{centis:02}", t.format("%Y-%m-%dT%H:%M:%S"))
}

pub fn write_events_csv<W: Write>(events: &[Event], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_CSV_HEADER)?;
    for e in events {
        w.write_record([
            format_time(&e.time),
            format!("{:.5}", e.lat),
            format!("{:.5}", e.lon),
            e.depth.map(|d| format!("{d:.2}")).unwrap_or_default(),
            format!("{:.1}", e.magnitude),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Deserialize)]
struct CsvRow {
    time_utc: String,
    lat_deg: f64,
    lon_deg: f64,
    depth_km: Option<f64>,
    mag: f64,
}

pub fn read_events_csv<R: Read>(input: R) -> Result<Vec<Event>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.deserialize::<CsvRow>() {
        let row = row?;
        let time = NaiveDateTime::parse_from_str(&row.time_utc, "%Y-%m-%dT%H:%M:%S%.f")
            .map_err(|e| Error::Config(format!("bad timestamp {:?}: {e}", row.time_utc)))?;
        out.push(Event {
            time,
            lat: row.lat_deg,
            lon: row.lon_deg,
            depth: row.depth_km,
            magnitude: (row.mag * 10.0).round() / 10.0,
            lat_err: None,
            lon_err: None,
            time_err: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "J1995101923501350 038 281421 165 1303276 203 4700   36W";

    fn record(lat: &str, mag: &str) -> String {
        let mut s = String::from("J1995101923501350 038");
        s.push_str(lat);
        s.push_str(" 165 1303276 203 4700   ");
        s.push_str(mag);
        s
    }

    #[test]
    fn parses_reference_record() {
        let ev = parse_record(SAMPLE, 1, &ColumnMap::default()).unwrap();
        assert_eq!(format_time(&ev.time), "1995-10-19T23:50:13.50");
        assert!((ev.lat - (28.0 + 14.21 / 60.0)).abs() < 1e-12);
        assert!((ev.lon - (130.0 + 32.76 / 60.0)).abs() < 1e-12);
        assert_eq!(ev.magnitude, 3.6);
        assert_eq!(ev.depth, Some(47.0));
        assert_eq!(ev.time_err, Some(0.38));
        assert!((ev.lat_err.unwrap() - 1.65 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn field_decoding_examples() {
        let map = ColumnMap::default();
        assert_eq!(parse_record(&record(" 280000", "20"), 1, &map).unwrap().magnitude, 2.0);
        assert_eq!(parse_record(&record(" 280000", "20"), 1, &map).unwrap().lat, 28.0);
        assert_eq!(parse_record(&record(" 283000", "20"), 1, &map).unwrap().lat, 28.5);
        assert_eq!(parse_record(&record(" 283000", "-5"), 1, &map).unwrap().magnitude, -0.5);
        assert_eq!(parse_record(&record(" 283000", "A3"), 1, &map).unwrap().magnitude, -1.3);
    }

    #[test]
    fn partial_fraction_digits_read_as_zeros() {
        // "024 " in the seconds field means 02.4 s.
        let line = "J199510200003024  029 280326 120 1300648 168  6     24W";
        let ev = parse_record(line, 1, &ColumnMap::default()).unwrap();
        assert_eq!(format_time(&ev.time), "1995-10-20T00:03:02.40");
        assert_eq!(ev.depth, Some(6.0));
    }

    #[test]
    fn rejects_bad_records_with_line_numbers() {
        let map = ColumnMap::default();
        let short = parse_record("J19951019", 7, &map).unwrap_err();
        assert_eq!(short.line, 7);
        assert!(matches!(short.kind, ParseErrorKind::TooShort { .. }));

        let bad_mag = parse_record(&record(" 280000", "X1"), 3, &map).unwrap_err();
        assert!(matches!(bad_mag.kind, ParseErrorKind::Magnitude(_)));
        let blank_mag = parse_record(&record(" 280000", "  "), 3, &map).unwrap_err();
        assert!(matches!(blank_mag.kind, ParseErrorKind::Magnitude(_)));

        let bad_date = SAMPLE.replacen("19951019", "19951319", 1);
        assert!(matches!(parse_record(&bad_date, 1, &map).unwrap_err().kind, ParseErrorKind::DateTime(_)));

        let wrong_type = SAMPLE.replacen('J', "U", 1);
        assert!(matches!(parse_record(&wrong_type, 1, &map).unwrap_err().kind, ParseErrorKind::RecordType(_)));
    }

    #[test]
    fn counts_are_conserved() {
        let text = format!("{SAMPLE}\n\nJ1995\n{}\r\n", record(" 283000", "25"));
        let out = parse_catalog(text.as_bytes(), &ColumnMap::default());
        assert_eq!(out.lines, 4);
        assert_eq!(out.events.len(), 2);
        assert_eq!(out.rejected.len(), 2);
        assert_eq!(out.rejected[0].line, 2);
        assert_eq!(out.rejected[1].line, 3);
    }

    #[test]
    fn encode_reproduces_numeric_fields() {
        let map = ColumnMap::default();
        let ev = parse_record(SAMPLE, 1, &map).unwrap();
        let line = encode_record(&ev, &map).unwrap();
        assert_eq!(parse_record(&line, 1, &map).unwrap(), ev);
        assert_eq!(&line[..44], &SAMPLE[..44]);
    }

    fn event(mag: f64, lat: f64, lon: f64, month: u32) -> Event {
        Event {
            time: Month::ym(2000, month).start(),
            lat,
            lon,
            depth: Some(10.0),
            magnitude: mag,
            lat_err: None,
            lon_err: None,
            time_err: None,
        }
    }

    #[test]
    fn filter_examples() {
        let mags = [1.0, 1.5, 1.9, 1.2, 2.0, 2.1, 3.0, 4.5, 2.0, 5.1];
        let events: Vec<Event> = mags.iter().map(|&m| event(m, 30.0, 130.0, 1)).collect();
        assert_eq!(filter_events(&events, &CatalogFilter::default()).len(), 6);
        assert_eq!(filter_events(&events, &CatalogFilter::everything()), events);

        let edge = vec![
            event(3.0, 49.0, 130.0, 1),
            event(3.0, 30.0, 149.0, 1),
            event(3.0, 25.0, 125.0, 1),
        ];
        assert_eq!(filter_events(&edge, &CatalogFilter::default()).len(), 1);
    }

    #[test]
    fn filter_keeps_inclusive_time_bounds() {
        let f = CatalogFilter::default();
        let mut early = event(3.0, 30.0, 130.0, 1);
        early.time = Month::ym(1982, 12).start();
        assert!(!f.accepts(&early));
        early.time = Month::ym(1983, 1).start();
        assert!(f.accepts(&early));
        early.time = Month::ym(2017, 4).start();
        assert!(!f.accepts(&early));
    }

    #[test]
    fn csv_round_trip() {
        let events = vec![event(2.3, 30.12345, 130.5, 2), event(7.1, 41.0, 142.25, 3)];
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time_utc,lat_deg,lon_deg,depth_km,mag\n2000-02-01T00:00:00.00,30.12345,130.50000,10.00,2.3"));
        let back = read_events_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].magnitude, 7.1);
        assert_eq!(back[0].time, events[0].time);
    }
}
