//! Ingestion and enrichment: meter files, survey encoding, weather joins,
//! calendar attributes, and the synthetic-data generator used for desk-scale
//! experiments.

pub mod calendar;
pub mod encode;
pub mod meter;
pub mod synth;
pub mod weather;

use std::collections::BTreeMap;

use crate::dataset::{
    AttrKind, AttributeDef, AttributeSchema, AttributeVector, Dataset, DayInstance, SegmentedDay,
};
use crate::error::{Error, Result};

pub use calendar::{enrich_calendar, HolidayCalendar, CALENDAR_ATTRIBUTES};
pub use encode::{encode_attributes, Encoding, EncodingEntry, EncodingSchema, SurveyTable};
pub use meter::yearly_consumption_by_year;
pub use synth::{synth_dataset, ArchetypeSpec, SynthOutput, SynthSpec};
pub use weather::{join_weather, WeatherDay, WeatherTable, WEATHER_ATTRIBUTES};

/// Attach per-consumer attribute fragments to segmented days, producing a
/// consumer-attributes-only dataset in canonical (consumer_id, date) order.
///
/// When `yearly_by_year` is given and the fragment schema has no
/// `yearly_consumption` column, one is appended per instance from the
/// consumer's metered total of that calendar year.
pub fn assemble_dataset(
    days: Vec<SegmentedDay>,
    consumer_defs: Vec<AttributeDef>,
    consumer_attrs: &BTreeMap<String, Vec<f64>>,
    yearly_by_year: Option<&BTreeMap<(String, i32), f64>>,
) -> Result<Dataset> {
    use chrono::Datelike;

    if days.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let series_len = days[0].series.len();
    let mut defs = consumer_defs;
    let append_yearly = yearly_by_year.is_some()
        && !defs.iter().any(|d| d.name == "yearly_consumption");
    if append_yearly {
        defs.push(AttributeDef::new("yearly_consumption", AttrKind::Consumer));
    }
    let schema = AttributeSchema::new(defs);

    let mut instances = Vec::with_capacity(days.len());
    for day in days {
        let mut attrs = consumer_attrs
            .get(&day.consumer_id)
            .ok_or_else(|| Error::MissingSurveyColumn(format!(
                "no attributes for consumer {}",
                day.consumer_id
            )))?
            .clone();
        if append_yearly {
            let key = (day.consumer_id.clone(), day.date.year());
            let total = yearly_by_year
                .unwrap()
                .get(&key)
                .copied()
                .unwrap_or(f64::NAN);
            attrs.push(total);
        }
        instances.push(DayInstance {
            consumer_id: day.consumer_id,
            date: day.date,
            attributes: AttributeVector::new(attrs),
            series: day.series,
        });
    }
    let mut dataset = Dataset::new(schema, series_len, instances);
    dataset.sort_canonical();
    Ok(dataset)
}

/// Enrich a consumer-attributes dataset with the 8 weather and 7 calendar
/// columns, appended in that order.
pub fn enrich_dataset(
    dataset: &Dataset,
    weather: &weather::WeatherTable,
    holidays: &calendar::HolidayCalendar,
) -> Result<Dataset> {
    let with_weather = weather::join_weather(dataset, weather)?;
    calendar::add_calendar(&with_weather, holidays)
}
