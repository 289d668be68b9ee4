//! Scenario generation for daylong electricity consumption time series.
//!
//! The model is a predictive clustering tree (PCT): a binary decision tree
//! whose splits on consumer/weather/calendar attributes minimize the
//! variance of the daylong consumption series in each child, so every leaf
//! is a cluster of similar measured days that is also predictable from
//! attributes alone. Scenarios for an unmeasured consumer are produced by
//! routing its attribute vector to a leaf and sampling member series, which
//! guarantees every generated scenario is a real measured day.
//!
//! Module map:
//! - [`dataset`]: domain types, validation, day segmentation, canonical CSV
//! - [`variance`]: centroid/pairwise variance and the incremental split scan
//! - [`pct`]: tree induction, reduced-error pruning, query routing
//! - [`scengen`]: leaf sampling and the attribute-blind random baseline
//! - [`eval`]: energy score, consumer-level cross-validation, size scaling
//! - [`data`]: meter/survey/weather ingestion, enrichment, synthetic data
//! - [`export`]: model files, n-ary display trees, quantile bands, DOT

pub mod data;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod export;
pub mod pct;
pub mod scengen;
pub mod variance;

mod seed;

pub use error::{Error, Result};
