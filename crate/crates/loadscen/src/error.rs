//! Error type shared by all modules.

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,

    #[error("variance of empty node")]
    EmptyNode,

    #[error("empty scenario list")]
    EmptyScenarios,

    #[error("empty member list")]
    EmptyMembers,

    #[error("duplicate timestamp {timestamp} for consumer {consumer_id}")]
    DuplicateTimestamp {
        consumer_id: String,
        timestamp: String,
    },

    #[error("non-uniform spacing within day {date} for consumer {consumer_id}")]
    NonUniformSpacing {
        consumer_id: String,
        date: NaiveDate,
    },

    #[error("series length mismatch: expected {expected}, got {actual}")]
    SeriesLength { expected: usize, actual: usize },

    #[error("attribute vector has {actual} values but the schema declares {expected}")]
    SchemaLength { expected: usize, actual: usize },

    #[error("schema hash mismatch: model was trained on a different attribute schema")]
    SchemaHashMismatch,

    #[error("weather table is missing dates: {}", format_dates(.0))]
    MissingWeatherDates(Vec<NaiveDate>),

    #[error("unknown level {value:?} for attribute {attribute}")]
    UnknownLevel { attribute: String, value: String },

    #[error("missing survey column {0:?}")]
    MissingSurveyColumn(String),

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("training series store is required but the model does not embed one")]
    MissingTrainStore,

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_dates(dates: &[NaiveDate]) -> String {
    let mut s = dates
        .iter()
        .take(8)
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    if dates.len() > 8 {
        s.push_str(&format!(", ... ({} total)", dates.len()));
    }
    s
}
