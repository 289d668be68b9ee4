//! Meter reading ingestion: `consumer_id,timestamp,kwh` rows segmented into
//! complete calendar days per consumer.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate};

use crate::dataset::{segment_year_to_days, MeterReading, SamplingPeriod, SegmentedDay};
use crate::error::{Error, Result};

/// Read a meter CSV and group readings by consumer, sorted by timestamp.
pub fn read_meter_csv<R: Read>(
    reader: R,
    path_label: &str,
) -> Result<BTreeMap<String, Vec<MeterReading>>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<&str> = r.headers()?.iter().collect();
    if header != ["consumer_id", "timestamp", "kwh"] {
        return Err(Error::Parse {
            path: path_label.to_owned(),
            line: 1,
            message: format!("expected header consumer_id,timestamp,kwh, got {header:?}"),
        });
    }
    let mut by_consumer: BTreeMap<String, Vec<MeterReading>> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let timestamp = DateTime::<FixedOffset>::parse_from_rfc3339(&rec[1]).map_err(|e| {
            Error::Parse {
                path: path_label.to_owned(),
                line,
                message: format!("bad timestamp {:?}: {e}", &rec[1]),
            }
        })?;
        let kwh = rec[2].parse::<f64>().map_err(|e| Error::Parse {
            path: path_label.to_owned(),
            line,
            message: format!("bad kwh {:?}: {e}", &rec[2]),
        })?;
        by_consumer
            .entry(rec[0].to_owned())
            .or_default()
            .push(MeterReading { timestamp, kwh });
    }
    for readings in by_consumer.values_mut() {
        readings.sort_by_key(|r| r.timestamp);
    }
    Ok(by_consumer)
}

pub fn load_meter_csv(path: &Path) -> Result<BTreeMap<String, Vec<MeterReading>>> {
    let file = std::fs::File::open(path)?;
    read_meter_csv(std::io::BufReader::new(file), &path.display().to_string())
}

/// Segment every consumer's readings into complete days. Returns the kept
/// days (consumer order, then date order) and the dropped dates per consumer.
pub fn segment_all(
    by_consumer: &BTreeMap<String, Vec<MeterReading>>,
    period: SamplingPeriod,
) -> Result<(Vec<SegmentedDay>, BTreeMap<String, Vec<NaiveDate>>)> {
    let mut days = Vec::new();
    let mut drops = BTreeMap::new();
    for (consumer, readings) in by_consumer {
        let outcome = segment_year_to_days(consumer, readings, period)?;
        if !outcome.dropped_dates.is_empty() {
            drops.insert(consumer.clone(), outcome.dropped_dates);
        }
        days.extend(outcome.days);
    }
    Ok((days, drops))
}

/// Total metered kWh per (consumer, calendar year) over the kept days; used
/// as the `yearly_consumption` attribute when the survey does not carry one.
pub fn yearly_consumption_by_year(days: &[SegmentedDay]) -> BTreeMap<(String, i32), f64> {
    let mut totals: BTreeMap<(String, i32), f64> = BTreeMap::new();
    for day in days {
        let key = (day.consumer_id.clone(), day.date.year());
        *totals.entry(key).or_default() += day.series.values().iter().sum::<f64>();
    }
    totals
}
