//! Canonical domain types and dataset container.
//!
//! A [`Dataset`] is a list of [`DayInstance`]s: one attribute vector paired
//! with one daylong consumption series. All instances of a dataset share one
//! attribute schema and one series length `T` (96 for 15-min sampling, 48
//! for 30-min). Types are immutable after construction and safe to share
//! across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One daylong vector of consumption values, kWh per interval.
///
/// Negative values are allowed (PV injection behind the meter).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DaySeries(Vec<f64>);

impl DaySeries {
    pub fn new(values: Vec<f64>) -> Self {
        DaySeries(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Squared Euclidean distance to another series of the same length.
    pub fn sq_dist(&self, other: &DaySeries) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Euclidean distance to another series of the same length.
    pub fn dist(&self, other: &DaySeries) -> f64 {
        self.sq_dist(other).sqrt()
    }
}

impl From<Vec<f64>> for DaySeries {
    fn from(values: Vec<f64>) -> Self {
        DaySeries(values)
    }
}

/// Attribute origin, used for bookkeeping and display grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrKind {
    Consumer,
    Weather,
    Calendar,
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrKind::Consumer => write!(f, "consumer"),
            AttrKind::Weather => write!(f, "weather"),
            AttrKind::Calendar => write!(f, "calendar"),
        }
    }
}

/// One named attribute column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttrKind,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, kind: AttrKind) -> Self {
        AttributeDef {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered list of attribute definitions shared by every instance of a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    defs: Vec<AttributeDef>,
}

impl AttributeSchema {
    pub fn new(defs: Vec<AttributeDef>) -> Self {
        AttributeSchema { defs }
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn defs(&self) -> &[AttributeDef] {
        &self.defs
    }

    pub fn name(&self, index: usize) -> &str {
        &self.defs[index].name
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.name == name)
    }

    /// Stable 64-bit fingerprint of names and kinds (FNV-1a). Recorded in
    /// model files so a model cannot silently be applied to a dataset with a
    /// different schema.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for d in &self.defs {
            eat(d.name.as_bytes());
            eat(&[0x1f]);
            eat(d.kind.to_string().as_bytes());
            eat(&[0x1e]);
        }
        h
    }
}

/// Ordered numeric attribute values; interpretation comes from the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeVector(Vec<f64>);

impl AttributeVector {
    pub fn new(values: Vec<f64>) -> Self {
        AttributeVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }
}

impl From<Vec<f64>> for AttributeVector {
    fn from(values: Vec<f64>) -> Self {
        AttributeVector(values)
    }
}

/// One (attribute vector, daylong series) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DayInstance {
    pub consumer_id: String,
    pub date: NaiveDate,
    pub attributes: AttributeVector,
    pub series: DaySeries,
}

/// Dataset of day instances with a homogeneous schema and series length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: AttributeSchema,
    /// Series length per day: 96 for 15-min sampling, 48 for 30-min.
    pub series_len: usize,
    pub instances: Vec<DayInstance>,
}

impl Dataset {
    pub fn new(schema: AttributeSchema, series_len: usize, instances: Vec<DayInstance>) -> Self {
        Dataset {
            schema,
            series_len,
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Distinct consumer ids, sorted.
    pub fn consumer_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .instances
            .iter()
            .map(|i| i.consumer_id.as_str())
            .collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Sort instances into the canonical (consumer_id, date) order.
    pub fn sort_canonical(&mut self) {
        self.instances
            .sort_by(|a, b| (a.consumer_id.as_str(), a.date).cmp(&(b.consumer_id.as_str(), b.date)));
    }

    /// Dataset restricted to the given consumers, preserving instance order.
    pub fn filter_consumers(&self, keep: &BTreeSet<String>) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            series_len: self.series_len,
            instances: self
                .instances
                .iter()
                .filter(|i| keep.contains(&i.consumer_id))
                .cloned()
                .collect(),
        }
    }
}

/// A single invariant violation found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyDataset,
    SeriesLength {
        consumer_id: String,
        date: NaiveDate,
        expected: usize,
        actual: usize,
    },
    AttributeLength {
        consumer_id: String,
        date: NaiveDate,
        expected: usize,
        actual: usize,
    },
    NonFiniteSeriesValue {
        consumer_id: String,
        date: NaiveDate,
        index: usize,
    },
    NonFiniteAttribute {
        consumer_id: String,
        date: NaiveDate,
        index: usize,
    },
    DuplicateInstance {
        consumer_id: String,
        date: NaiveDate,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDataset => write!(f, "dataset contains no instances"),
            Violation::SeriesLength {
                consumer_id,
                date,
                expected,
                actual,
            } => write!(
                f,
                "{consumer_id} {date}: series has {actual} values, expected {expected}"
            ),
            Violation::AttributeLength {
                consumer_id,
                date,
                expected,
                actual,
            } => write!(
                f,
                "{consumer_id} {date}: attribute vector has {actual} values, expected {expected}"
            ),
            Violation::NonFiniteSeriesValue {
                consumer_id,
                date,
                index,
            } => write!(f, "{consumer_id} {date}: series value {index} is not finite"),
            Violation::NonFiniteAttribute {
                consumer_id,
                date,
                index,
            } => write!(f, "{consumer_id} {date}: attribute {index} is not finite"),
            Violation::DuplicateInstance { consumer_id, date } => {
                write!(f, "duplicate instance ({consumer_id}, {date})")
            }
        }
    }
}

/// Result of [`validate_dataset`]: empty iff the dataset is valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "dataset valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check every dataset invariant and report all violations found.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    if dataset.instances.is_empty() {
        violations.push(Violation::EmptyDataset);
    }
    let expected_attrs = dataset.schema.len();
    let mut seen: BTreeSet<(&str, NaiveDate)> = BTreeSet::new();
    for inst in &dataset.instances {
        if inst.series.len() != dataset.series_len {
            violations.push(Violation::SeriesLength {
                consumer_id: inst.consumer_id.clone(),
                date: inst.date,
                expected: dataset.series_len,
                actual: inst.series.len(),
            });
        }
        if inst.attributes.len() != expected_attrs {
            violations.push(Violation::AttributeLength {
                consumer_id: inst.consumer_id.clone(),
                date: inst.date,
                expected: expected_attrs,
                actual: inst.attributes.len(),
            });
        }
        for (i, v) in inst.series.values().iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFiniteSeriesValue {
                    consumer_id: inst.consumer_id.clone(),
                    date: inst.date,
                    index: i,
                });
            }
        }
        for (i, v) in inst.attributes.values().iter().enumerate() {
            if !v.is_finite() {
                violations.push(Violation::NonFiniteAttribute {
                    consumer_id: inst.consumer_id.clone(),
                    date: inst.date,
                    index: i,
                });
            }
        }
        if !seen.insert((inst.consumer_id.as_str(), inst.date)) {
            violations.push(Violation::DuplicateInstance {
                consumer_id: inst.consumer_id.clone(),
                date: inst.date,
            });
        }
    }
    ValidationReport { violations }
}

/// Meter sampling period; fixes the per-day series length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingPeriod {
    Min15,
    Min30,
}

impl SamplingPeriod {
    pub fn minutes(self) -> u32 {
        match self {
            SamplingPeriod::Min15 => 15,
            SamplingPeriod::Min30 => 30,
        }
    }

    /// Readings per complete day: 96 for 15-min, 48 for 30-min.
    pub fn series_len(self) -> usize {
        (24 * 60 / self.minutes()) as usize
    }

    pub fn from_minutes(minutes: u32) -> Option<Self> {
        match minutes {
            15 => Some(SamplingPeriod::Min15),
            30 => Some(SamplingPeriod::Min30),
            _ => None,
        }
    }
}

/// One timestamped meter reading.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterReading {
    pub timestamp: DateTime<FixedOffset>,
    pub kwh: f64,
}

/// A complete segmented day, not yet carrying attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedDay {
    pub consumer_id: String,
    pub date: NaiveDate,
    pub series: DaySeries,
}

/// Outcome of segmenting one consumer's readings into calendar days.
#[derive(Debug, Clone, Default)]
pub struct SegmentOutcome {
    pub days: Vec<SegmentedDay>,
    /// Dates touched by at least one reading but dropped as incomplete
    /// (missing intervals, or 23h/25h daylight-saving days).
    pub dropped_dates: Vec<NaiveDate>,
}

/// Cut a consumer's timestamped readings into complete calendar days.
///
/// Days are calendar days in the local time carried by the timestamps, with
/// boundaries at 00:00. A day is kept only when every expected interval
/// (00:00, 00:00+period, ...) is present exactly once; anything else —
/// missing intervals, daylight-saving 23h/25h days — is dropped and counted.
/// A day with the right number of readings at the wrong clock positions is
/// rejected as non-uniform rather than silently dropped.
pub fn segment_year_to_days(
    consumer_id: &str,
    readings: &[MeterReading],
    period: SamplingPeriod,
) -> Result<SegmentOutcome> {
    let t = period.series_len();
    let step = Duration::minutes(i64::from(period.minutes()));

    // Group by local calendar date, checking for duplicate instants.
    let mut by_date: BTreeMap<NaiveDate, Vec<(NaiveDateTime, f64)>> = BTreeMap::new();
    let mut prev: Option<&MeterReading> = None;
    for r in readings {
        if let Some(p) = prev {
            if p.timestamp == r.timestamp {
                return Err(Error::DuplicateTimestamp {
                    consumer_id: consumer_id.to_owned(),
                    timestamp: r.timestamp.to_rfc3339(),
                });
            }
        }
        prev = Some(r);
        let local = r.timestamp.naive_local();
        by_date.entry(local.date()).or_default().push((local, r.kwh));
    }

    let mut outcome = SegmentOutcome::default();
    for (date, mut rows) in by_date {
        rows.sort_by_key(|(ts, _)| *ts);
        if rows.len() != t {
            outcome.dropped_dates.push(date);
            continue;
        }
        let midnight = date.and_time(NaiveTime::from_hms_opt(0, 0, 0).unwrap());
        let on_grid = rows
            .iter()
            .enumerate()
            .all(|(i, (ts, _))| *ts == midnight + step * i as i32);
        if !on_grid {
            // Right count but wrong positions: refuse rather than guess.
            return Err(Error::NonUniformSpacing {
                consumer_id: consumer_id.to_owned(),
                date,
            });
        }
        outcome.days.push(SegmentedDay {
            consumer_id: consumer_id.to_owned(),
            date,
            series: DaySeries::new(rows.into_iter().map(|(_, v)| v).collect()),
        });
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// Canonical day-instance CSV:
//   consumer_id,date,<attr_1>...<attr_A>,v_0...v_{T-1}
// Dates are ISO-8601; numbers are written as shortest round-trip decimals,
// so re-serializing a loaded dataset reproduces the file byte for byte.
// ---------------------------------------------------------------------------

/// Infer the attribute kind from its name. Weather and calendar columns have
/// fixed, well-known names; anything else is a consumer attribute.
pub fn infer_attr_kind(name: &str) -> AttrKind {
    if crate::data::weather::WEATHER_ATTRIBUTES.contains(&name) {
        AttrKind::Weather
    } else if crate::data::calendar::CALENDAR_ATTRIBUTES.contains(&name) {
        AttrKind::Calendar
    } else {
        AttrKind::Consumer
    }
}

/// Write a dataset in the canonical day-instance CSV format.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["consumer_id".to_owned(), "date".to_owned()];
    header.extend(dataset.schema.defs().iter().map(|d| d.name.clone()));
    header.extend((0..dataset.series_len).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    for inst in &dataset.instances {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(inst.consumer_id.clone());
        rec.push(inst.date.to_string());
        rec.extend(inst.attributes.values().iter().map(|v| v.to_string()));
        rec.extend(inst.series.values().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset_csv(dataset, std::io::BufWriter::new(file))
}

/// Read a dataset from the canonical day-instance CSV format.
///
/// The attribute block is everything between `date` and the first `v_0`
/// column; attribute kinds are inferred from the fixed weather/calendar
/// column names.
pub fn read_dataset_csv<R: Read>(reader: R, path_label: &str) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols[0] != "consumer_id" || cols[1] != "date" {
        return Err(Error::Parse {
            path: path_label.to_owned(),
            line: 1,
            message: "header must start with consumer_id,date".to_owned(),
        });
    }
    let first_v = cols
        .iter()
        .position(|c| *c == "v_0")
        .ok_or_else(|| Error::Parse {
            path: path_label.to_owned(),
            line: 1,
            message: "header has no v_0 column".to_owned(),
        })?;
    let series_len = cols.len() - first_v;
    let defs: Vec<AttributeDef> = cols[2..first_v]
        .iter()
        .map(|name| AttributeDef::new(*name, infer_attr_kind(name)))
        .collect();
    let schema = AttributeSchema::new(defs);

    let parse_f64 = |s: &str, line: u64| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Parse {
            path: path_label.to_owned(),
            line,
            message: format!("bad number {s:?}: {e}"),
        })
    };

    let mut instances = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        if rec.len() != cols.len() {
            return Err(Error::Parse {
                path: path_label.to_owned(),
                line,
                message: format!("expected {} fields, got {}", cols.len(), rec.len()),
            });
        }
        let date = rec[1].parse::<NaiveDate>().map_err(|e| Error::Parse {
            path: path_label.to_owned(),
            line,
            message: format!("bad date {:?}: {e}", &rec[1]),
        })?;
        let mut attrs = Vec::with_capacity(first_v - 2);
        for v in rec.iter().take(first_v).skip(2) {
            attrs.push(parse_f64(v, line)?);
        }
        let mut series = Vec::with_capacity(series_len);
        for v in rec.iter().skip(first_v) {
            series.push(parse_f64(v, line)?);
        }
        instances.push(DayInstance {
            consumer_id: rec[0].to_owned(),
            date,
            attributes: AttributeVector::new(attrs),
            series: DaySeries::new(series),
        });
    }
    Ok(Dataset::new(schema, series_len, instances))
}

pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset_csv(std::io::BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn schema2() -> AttributeSchema {
        AttributeSchema::new(vec![
            AttributeDef::new("yearly_consumption", AttrKind::Consumer),
            AttributeDef::new("pv_flag", AttrKind::Consumer),
        ])
    }

    fn inst(cid: &str, date: &str, attrs: Vec<f64>, series: Vec<f64>) -> DayInstance {
        DayInstance {
            consumer_id: cid.to_owned(),
            date: date.parse().unwrap(),
            attributes: AttributeVector::new(attrs),
            series: DaySeries::new(series),
        }
    }

    fn readings_for_days(
        offset_hours: i32,
        start: NaiveDate,
        n_days: i64,
        period: SamplingPeriod,
    ) -> Vec<MeterReading> {
        let tz = FixedOffset::east_opt(offset_hours * 3600).unwrap();
        let step = Duration::minutes(i64::from(period.minutes()));
        let mut out = Vec::new();
        for d in 0..n_days {
            let date = start + Duration::days(d);
            let midnight = tz
                .from_local_datetime(&date.and_hms_opt(0, 0, 0).unwrap())
                .unwrap();
            for i in 0..period.series_len() {
                out.push(MeterReading {
                    timestamp: midnight + step * i as i32,
                    kwh: 0.25,
                });
            }
        }
        out
    }

    #[test]
    fn complete_year_at_30_min_yields_365_days() {
        let readings = readings_for_days(1, "2013-01-01".parse().unwrap(), 365, SamplingPeriod::Min30);
        let out = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap();
        assert_eq!(out.days.len(), 365);
        assert!(out.dropped_dates.is_empty());
        assert!(out.days.iter().all(|d| d.series.len() == 48));
    }

    #[test]
    fn single_missing_interval_drops_that_day() {
        let mut readings =
            readings_for_days(1, "2013-01-01".parse().unwrap(), 365, SamplingPeriod::Min30);
        let gap_date: NaiveDate = "2013-03-02".parse().unwrap();
        let victim = readings
            .iter()
            .position(|r| r.timestamp.naive_local().date() == gap_date)
            .unwrap();
        readings.remove(victim + 7);
        let out = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap();
        assert_eq!(out.days.len(), 364);
        assert_eq!(out.dropped_dates, vec![gap_date]);
    }

    #[test]
    fn leap_year_2012_yields_366_days() {
        // Calendar oracle: enumerate the dates of 2012 directly.
        use chrono::Datelike;
        let start: NaiveDate = "2012-01-01".parse().unwrap();
        let mut expected_dates = Vec::new();
        let mut d = start;
        while d.year() == 2012 {
            expected_dates.push(d);
            d += Duration::days(1);
        }
        assert_eq!(expected_dates.len(), 366);
        let readings = readings_for_days(0, start, 366, SamplingPeriod::Min30);
        let out = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap();
        assert_eq!(out.days.len(), 366);
        let got: Vec<NaiveDate> = out.days.iter().map(|day| day.date).collect();
        assert_eq!(got, expected_dates);
    }

    #[test]
    fn duplicate_timestamp_is_rejected_with_the_offender() {
        let mut readings =
            readings_for_days(1, "2013-01-01".parse().unwrap(), 2, SamplingPeriod::Min30);
        let dup = readings[10].clone();
        readings.insert(10, dup.clone());
        let err = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap_err();
        match err {
            Error::DuplicateTimestamp { timestamp, .. } => {
                assert_eq!(timestamp, dup.timestamp.to_rfc3339());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn off_grid_day_with_full_count_is_rejected() {
        // 48 readings, uniformly spaced, but anchored at 00:07 instead of 00:00.
        let tz = FixedOffset::east_opt(3600).unwrap();
        let base = tz
            .from_local_datetime(&"2013-01-01T00:07:00".parse().unwrap())
            .unwrap();
        let readings: Vec<MeterReading> = (0..48)
            .map(|i| MeterReading {
                timestamp: base + Duration::minutes(30 * i),
                kwh: 0.1,
            })
            .collect();
        let err = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap_err();
        assert!(matches!(err, Error::NonUniformSpacing { .. }));
    }

    #[test]
    fn dst_spring_forward_day_is_dropped_as_incomplete() {
        // Local clock jumps from 02:00 (+01) to 03:00 (+02): the date has 92
        // local slots at 15-min sampling instead of 96.
        let date: NaiveDate = "2013-03-31".parse().unwrap();
        let winter = FixedOffset::east_opt(3600).unwrap();
        let summer = FixedOffset::east_opt(7200).unwrap();
        let mut readings = Vec::new();
        for i in 0..8 {
            let local = date.and_hms_opt(0, 0, 0).unwrap() + Duration::minutes(15 * i);
            readings.push(MeterReading {
                timestamp: winter.from_local_datetime(&local).unwrap(),
                kwh: 0.1,
            });
        }
        for i in 0..84 {
            let local = date.and_hms_opt(3, 0, 0).unwrap() + Duration::minutes(15 * i);
            readings.push(MeterReading {
                timestamp: summer.from_local_datetime(&local).unwrap(),
                kwh: 0.1,
            });
        }
        let out = segment_year_to_days("c1", &readings, SamplingPeriod::Min15).unwrap();
        assert!(out.days.is_empty());
        assert_eq!(out.dropped_dates, vec![date]);
    }

    #[test]
    fn kept_plus_dropped_equals_touched_dates() {
        let mut readings =
            readings_for_days(1, "2013-02-01".parse().unwrap(), 10, SamplingPeriod::Min30);
        readings.remove(49); // poke a hole in day 2
        readings.remove(200); // and day 5
        let out = segment_year_to_days("c1", &readings, SamplingPeriod::Min30).unwrap();
        let touched: BTreeSet<NaiveDate> = readings
            .iter()
            .map(|r| r.timestamp.naive_local().date())
            .collect();
        assert_eq!(out.days.len() + out.dropped_dates.len(), touched.len());
    }

    #[test]
    fn validate_reports_nan_with_instance_and_index() {
        let ds = Dataset::new(
            schema2(),
            4,
            vec![inst("a", "2013-01-01", vec![1.0, 0.0], vec![0.1, f64::NAN, 0.3, 0.4])],
        );
        let report = validate_dataset(&ds);
        assert_eq!(
            report.violations,
            vec![Violation::NonFiniteSeriesValue {
                consumer_id: "a".to_owned(),
                date: "2013-01-01".parse().unwrap(),
                index: 1,
            }]
        );
    }

    #[test]
    fn validate_reports_duplicate_instances() {
        let ds = Dataset::new(
            schema2(),
            2,
            vec![
                inst("a", "2013-01-01", vec![1.0, 0.0], vec![0.1, 0.2]),
                inst("a", "2013-01-01", vec![1.0, 0.0], vec![0.3, 0.4]),
            ],
        );
        let report = validate_dataset(&ds);
        assert_eq!(
            report.violations,
            vec![Violation::DuplicateInstance {
                consumer_id: "a".to_owned(),
                date: "2013-01-01".parse().unwrap(),
            }]
        );
    }

    #[test]
    fn validate_accepts_a_clean_dataset() {
        let instances: Vec<DayInstance> = (0..10)
            .map(|i| {
                inst(
                    &format!("c{i}"),
                    "2013-01-01",
                    vec![f64::from(i), 0.0],
                    vec![0.1, -0.2],
                )
            })
            .collect();
        let ds = Dataset::new(schema2(), 2, instances);
        assert!(validate_dataset(&ds).is_valid());
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let mut ds = Dataset::new(
            schema2(),
            3,
            vec![
                inst("a", "2013-01-02", vec![4250.5, 1.0], vec![0.125, -0.5, 3.0]),
                inst("b", "2013-01-01", vec![900.0, 0.0], vec![1e-9, 2.25, 0.0]),
            ],
        );
        ds.sort_canonical();
        let mut buf = Vec::new();
        write_dataset_csv(&ds, &mut buf).unwrap();
        let back = read_dataset_csv(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, ds);
        let mut buf2 = Vec::new();
        write_dataset_csv(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
