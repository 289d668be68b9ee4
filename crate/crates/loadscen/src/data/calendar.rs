//! Calendar attributes derived from the date plus a holiday list file.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};

use crate::dataset::{AttrKind, AttributeDef, AttributeSchema, Dataset};
use crate::error::{Error, Result};

/// The 7 calendar attribute columns, in schema order.
pub const CALENDAR_ATTRIBUTES: [&str; 7] = [
    "day_of_week",
    "day_of_month",
    "day_of_year",
    "month",
    "season",
    "is_weekend",
    "is_holiday",
];

/// Holiday dates loaded from a file (one ISO date per line), kept local so
/// runs never depend on a network service.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HolidayCalendar {
    dates: BTreeSet<NaiveDate>,
}

impl HolidayCalendar {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        HolidayCalendar {
            dates: dates.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        HolidayCalendar::default()
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.dates.contains(&date)
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Parse one ISO-8601 date per line; blank lines and `#` comments are
    /// skipped.
    pub fn from_reader<R: Read>(reader: R, path_label: &str) -> Result<Self> {
        let mut dates = BTreeSet::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let date = trimmed.parse::<NaiveDate>().map_err(|e| Error::Parse {
                path: path_label.to_owned(),
                line: i as u64 + 1,
                message: format!("bad date {trimmed:?}: {e}"),
            })?;
            dates.insert(date);
        }
        Ok(HolidayCalendar { dates })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file, &path.display().to_string())
    }
}

/// Meteorological season: Dec-Feb = 0 (winter), Mar-May = 1, Jun-Aug = 2,
/// Sep-Nov = 3.
fn season_of(month: u32) -> u32 {
    match month {
        12 | 1 | 2 => 0,
        3..=5 => 1,
        6..=8 => 2,
        _ => 3,
    }
}

/// The 7 numeric calendar attributes for one date, in
/// [`CALENDAR_ATTRIBUTES`] order. Day of week counts from Monday = 0.
pub fn enrich_calendar(date: NaiveDate, holidays: &HolidayCalendar) -> [f64; 7] {
    let dow = date.weekday().num_days_from_monday();
    let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
    [
        f64::from(dow),
        f64::from(date.day()),
        f64::from(date.ordinal()),
        f64::from(date.month()),
        f64::from(season_of(date.month())),
        f64::from(u8::from(weekend)),
        f64::from(u8::from(holidays.contains(date))),
    ]
}

/// Append the 7 calendar columns to every instance.
pub fn add_calendar(dataset: &Dataset, holidays: &HolidayCalendar) -> Result<Dataset> {
    for name in CALENDAR_ATTRIBUTES {
        if dataset.schema.index_of(name).is_some() {
            return Err(Error::InvalidConfig(format!(
                "dataset already has a {name} column"
            )));
        }
    }
    let mut defs = dataset.schema.defs().to_vec();
    defs.extend(CALENDAR_ATTRIBUTES.map(|n| AttributeDef::new(n, AttrKind::Calendar)));
    let schema = AttributeSchema::new(defs);
    let instances = dataset
        .instances
        .iter()
        .map(|inst| {
            let mut attrs = inst.attributes.values().to_vec();
            attrs.extend(enrich_calendar(inst.date, holidays));
            crate::dataset::DayInstance {
                consumer_id: inst.consumer_id.clone(),
                date: inst.date,
                attributes: attrs.into(),
                series: inst.series.clone(),
            }
        })
        .collect();
    Ok(Dataset::new(schema, dataset.series_len, instances))
}
