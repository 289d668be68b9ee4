//! Region-level daily weather: one row per date, joined onto every instance
//! of that date.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttrKind, AttributeDef, AttributeSchema, Dataset};
use crate::error::{Error, Result};

/// The 8 weather attribute columns, in schema order.
pub const WEATHER_ATTRIBUTES: [&str; 8] = [
    "tempC_min",
    "tempC_max",
    "tempC_avg",
    "feels_like_avg",
    "sun_hour",
    "uv_index",
    "humidity",
    "wind_kmph",
];

/// Weather observations for one date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherDay {
    pub date: NaiveDate,
    pub tempc_min: f64,
    pub tempc_max: f64,
    pub tempc_avg: f64,
    pub feels_like_avg: f64,
    pub sun_hour: f64,
    pub uv_index: f64,
    pub humidity: f64,
    pub wind_kmph: f64,
}

impl WeatherDay {
    pub fn values(&self) -> [f64; 8] {
        [
            self.tempc_min,
            self.tempc_max,
            self.tempc_avg,
            self.feels_like_avg,
            self.sun_hour,
            self.uv_index,
            self.humidity,
            self.wind_kmph,
        ]
    }
}

/// Date-indexed weather rows for one region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherTable {
    days: BTreeMap<NaiveDate, WeatherDay>,
}

impl WeatherTable {
    pub fn new(days: impl IntoIterator<Item = WeatherDay>) -> Self {
        WeatherTable {
            days: days.into_iter().map(|d| (d.date, d)).collect(),
        }
    }

    pub fn get(&self, date: NaiveDate) -> Option<&WeatherDay> {
        self.days.get(&date)
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeatherDay> {
        self.days.values()
    }

    /// Read `date,tempC_min,tempC_max,tempC_avg,feels_like_avg,sun_hour,uv_index,humidity,wind_kmph`.
    pub fn from_reader<R: Read>(reader: R, path_label: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let expected: Vec<String> = std::iter::once("date".to_owned())
            .chain(WEATHER_ATTRIBUTES.iter().map(|s| (*s).to_owned()))
            .collect();
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != expected {
            return Err(Error::Parse {
                path: path_label.to_owned(),
                line: 1,
                message: format!("expected header {expected:?}, got {header:?}"),
            });
        }
        let mut days = BTreeMap::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i as u64 + 2;
            let date = rec[0].parse::<NaiveDate>().map_err(|e| Error::Parse {
                path: path_label.to_owned(),
                line,
                message: format!("bad date {:?}: {e}", &rec[0]),
            })?;
            let mut vals = [0.0f64; 8];
            for (j, v) in vals.iter_mut().enumerate() {
                *v = rec[j + 1].parse::<f64>().map_err(|e| Error::Parse {
                    path: path_label.to_owned(),
                    line,
                    message: format!("bad number {:?}: {e}", &rec[j + 1]),
                })?;
            }
            days.insert(
                date,
                WeatherDay {
                    date,
                    tempc_min: vals[0],
                    tempc_max: vals[1],
                    tempc_avg: vals[2],
                    feels_like_avg: vals[3],
                    sun_hour: vals[4],
                    uv_index: vals[5],
                    humidity: vals[6],
                    wind_kmph: vals[7],
                },
            );
        }
        Ok(WeatherTable { days })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(
            std::io::BufReader::new(file),
            &path.display().to_string(),
        )
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_owned()];
        header.extend(WEATHER_ATTRIBUTES.iter().map(|s| (*s).to_owned()));
        w.write_record(&header)?;
        for day in self.days.values() {
            let mut rec = vec![day.date.to_string()];
            rec.extend(day.values().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }
}

/// Append the 8 weather columns to every instance; all instances of one
/// date receive identical values. Fails listing every date the table lacks.
pub fn join_weather(dataset: &Dataset, weather: &WeatherTable) -> Result<Dataset> {
    for name in WEATHER_ATTRIBUTES {
        if dataset.schema.index_of(name).is_some() {
            return Err(Error::InvalidConfig(format!(
                "dataset already has a {name} column"
            )));
        }
    }
    let mut missing: Vec<NaiveDate> = dataset
        .instances
        .iter()
        .filter(|i| weather.get(i.date).is_none())
        .map(|i| i.date)
        .collect();
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::MissingWeatherDates(missing));
    }
    let mut defs = dataset.schema.defs().to_vec();
    defs.extend(WEATHER_ATTRIBUTES.map(|n| AttributeDef::new(n, AttrKind::Weather)));
    let schema = AttributeSchema::new(defs);
    let instances = dataset
        .instances
        .iter()
        .map(|inst| {
            let mut attrs = inst.attributes.values().to_vec();
            attrs.extend(weather.get(inst.date).unwrap().values());
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeVector, DayInstance, DaySeries};

    fn day(date: &str, base: f64) -> WeatherDay {
        WeatherDay {
            date: date.parse().unwrap(),
            tempc_min: base - 3.0,
            tempc_max: base + 4.0,
            tempc_avg: base,
            feels_like_avg: base - 1.0,
            sun_hour: 5.0,
            uv_index: 2.0,
            humidity: 80.0,
            wind_kmph: 12.0,
        }
    }

    fn dataset_on(dates: &[&str]) -> Dataset {
        let schema = AttributeSchema::new(vec![AttributeDef::new("x", AttrKind::Consumer)]);
        let instances = dates
            .iter()
            .enumerate()
            .map(|(i, d)| DayInstance {
                consumer_id: format!("c{i}"),
                date: d.parse().unwrap(),
                attributes: AttributeVector::new(vec![1.0]),
                series: DaySeries::new(vec![0.5, 0.5]),
            })
            .collect();
        Dataset::new(schema, 2, instances)
    }

    #[test]
    fn same_date_consumers_get_identical_weather() {
        let table = WeatherTable::new([day("2013-01-01", 5.0)]);
        let ds = dataset_on(&["2013-01-01", "2013-01-01"]);
        let joined = join_weather(&ds, &table).unwrap();
        assert_eq!(joined.schema.len(), 9);
        assert_eq!(
            joined.instances[0].attributes.values()[1..],
            joined.instances[1].attributes.values()[1..]
        );
    }

    #[test]
    fn missing_dates_are_named_in_the_error() {
        let table = WeatherTable::new([day("2013-01-01", 5.0)]);
        let ds = dataset_on(&["2013-01-01", "2013-01-02"]);
        match join_weather(&ds, &table).unwrap_err() {
            Error::MissingWeatherDates(dates) => {
                assert_eq!(dates, vec!["2013-01-02".parse::<NaiveDate>().unwrap()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn joined_weather_columns_reproduce_the_source_rows() {
        let table = WeatherTable::new([day("2013-01-01", 5.0), day("2013-01-02", 7.5)]);
        let ds = dataset_on(&["2013-01-01", "2013-01-02"]);
        let joined = join_weather(&ds, &table).unwrap();
        for inst in &joined.instances {
            let source = table.get(inst.date).unwrap().values();
            assert_eq!(&inst.attributes.values()[1..], &source);
        }
    }

    #[test]
    fn csv_round_trip() {
        let table = WeatherTable::new([day("2013-01-01", 5.0), day("2013-06-15", 19.25)]);
        let mut buf = Vec::new();
        table.write(&mut buf).unwrap();
        let back = WeatherTable::from_reader(buf.as_slice(), "mem").unwrap();
        assert_eq!(back, table);
    }
}
