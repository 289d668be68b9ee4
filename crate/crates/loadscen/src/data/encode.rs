//! Survey attribute encoding: raw string columns become numeric columns via
//! a user-supplied schema (numeric passthrough, ordinal level index, or
//! one-hot indicators). Missingness must be declared as an explicit level;
//! undeclared values are errors, never silently imputed.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttrKind, AttributeDef};
use crate::error::{Error, Result};

/// How one raw survey column turns into numeric columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Parse the raw value as a number.
    Numeric,
    /// Level index in the declared order.
    Ordinal(Vec<String>),
    /// One indicator column per declared level.
    OneHot(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingEntry {
    pub name: String,
    pub kind: AttrKind,
    pub encoding: Encoding,
}

/// Ordered encoding instructions, loaded from a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingSchema {
    pub entries: Vec<EncodingEntry>,
}

impl EncodingSchema {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// The numeric columns this schema expands to; one-hot entries become
    /// one `name=level` column per level.
    pub fn expanded_defs(&self) -> Vec<AttributeDef> {
        let mut defs = Vec::new();
        for e in &self.entries {
            match &e.encoding {
                Encoding::Numeric | Encoding::Ordinal(_) => {
                    defs.push(AttributeDef::new(e.name.clone(), e.kind));
                }
                Encoding::OneHot(levels) => {
                    for level in levels {
                        defs.push(AttributeDef::new(format!("{}={level}", e.name), e.kind));
                    }
                }
            }
        }
        defs
    }
}

/// Raw survey rows: `consumer_id` plus string-valued columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyTable {
    pub columns: Vec<String>,
    rows: BTreeMap<String, Vec<String>>,
}

impl SurveyTable {
    pub fn from_reader<R: Read>(reader: R, path_label: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header.first().map(String::as_str) != Some("consumer_id") {
            return Err(Error::Parse {
                path: path_label.to_owned(),
                line: 1,
                message: "survey header must start with consumer_id".to_owned(),
            });
        }
        let columns: Vec<String> = header[1..].to_vec();
        let mut rows = BTreeMap::new();
        for rec in r.records() {
            let rec = rec?;
            rows.insert(
                rec[0].to_owned(),
                rec.iter().skip(1).map(str::to_owned).collect(),
            );
        }
        Ok(SurveyTable { columns, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_reader(
            std::io::BufReader::new(std::fs::File::open(path)?),
            &path.display().to_string(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn consumers(&self) -> impl Iterator<Item = &String> {
        self.rows.keys()
    }

    fn value(&self, consumer: &str, column: &str) -> Option<&str> {
        let idx = self.columns.iter().position(|c| c == column)?;
        self.rows.get(consumer).map(|r| r[idx].as_str())
    }
}

/// Encode every consumer's raw survey row into its numeric attribute
/// fragment, in schema entry order.
pub fn encode_attributes(
    survey: &SurveyTable,
    schema: &EncodingSchema,
) -> Result<BTreeMap<String, Vec<f64>>> {
    for e in &schema.entries {
        if !survey.columns.iter().any(|c| c == &e.name) {
            return Err(Error::MissingSurveyColumn(e.name.clone()));
        }
    }
    let mut out = BTreeMap::new();
    for consumer in survey.consumers() {
        let mut values = Vec::new();
        for e in &schema.entries {
            let raw = survey.value(consumer, &e.name).unwrap_or("");
            match &e.encoding {
                Encoding::Numeric => {
                    let v = raw.parse::<f64>().map_err(|_| Error::UnknownLevel {
                        attribute: e.name.clone(),
                        value: raw.to_owned(),
                    })?;
                    values.push(v);
                }
                Encoding::Ordinal(levels) => {
                    let idx = levels.iter().position(|l| l == raw).ok_or_else(|| {
                        Error::UnknownLevel {
                            attribute: e.name.clone(),
                            value: raw.to_owned(),
                        }
                    })?;
                    values.push(idx as f64);
                }
                Encoding::OneHot(levels) => {
                    let idx = levels.iter().position(|l| l == raw).ok_or_else(|| {
                        Error::UnknownLevel {
                            attribute: e.name.clone(),
                            value: raw.to_owned(),
                        }
                    })?;
                    for (i, _) in levels.iter().enumerate() {
                        values.push(f64::from(u8::from(i == idx)));
                    }
                }
            }
        }
        out.insert(consumer.clone(), values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn survey() -> SurveyTable {
        let csv = "consumer_id,insulation,ownership,bedrooms\n\
                   c1,yes,rent,3\n\
                   c2,unknown,owner,2\n";
        SurveyTable::from_reader(csv.as_bytes(), "mem").unwrap()
    }

    fn schema() -> EncodingSchema {
        EncodingSchema {
            entries: vec![
                EncodingEntry {
                    name: "insulation".to_owned(),
                    kind: AttrKind::Consumer,
                    encoding: Encoding::Ordinal(vec![
                        "no".to_owned(),
                        "yes".to_owned(),
                        "unknown".to_owned(),
                    ]),
                },
                EncodingEntry {
                    name: "ownership".to_owned(),
                    kind: AttrKind::Consumer,
                    encoding: Encoding::OneHot(vec![
                        "owner".to_owned(),
                        "rent".to_owned(),
                        "other".to_owned(),
                    ]),
                },
                EncodingEntry {
                    name: "bedrooms".to_owned(),
                    kind: AttrKind::Consumer,
                    encoding: Encoding::Numeric,
                },
            ],
        }
    }

    #[test]
    fn ordinal_maps_to_level_index() {
        let encoded = encode_attributes(&survey(), &schema()).unwrap();
        assert_eq!(encoded["c1"][0], 1.0);
        assert_eq!(encoded["c2"][0], 2.0);
    }

    #[test]
    fn onehot_expands_to_indicator_columns() {
        let encoded = encode_attributes(&survey(), &schema()).unwrap();
        assert_eq!(&encoded["c1"][1..4], &[0.0, 1.0, 0.0]);
        assert_eq!(&encoded["c2"][1..4], &[1.0, 0.0, 0.0]);
        let defs = schema().expanded_defs();
        assert_eq!(defs.len(), 5);
        assert_eq!(defs[1].name, "ownership=owner");
    }

    #[test]
    fn numeric_passes_through() {
        let encoded = encode_attributes(&survey(), &schema()).unwrap();
        assert_eq!(encoded["c1"][4], 3.0);
    }

    #[test]
    fn undeclared_level_is_an_error() {
        let csv = "consumer_id,insulation,ownership,bedrooms\nc1,N/A,rent,1\n";
        let bad = SurveyTable::from_reader(csv.as_bytes(), "mem").unwrap();
        match encode_attributes(&bad, &schema()).unwrap_err() {
            Error::UnknownLevel { attribute, value } => {
                assert_eq!(attribute, "insulation");
                assert_eq!(value, "N/A");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn encoding_schema_json_round_trip() {
        let s = schema();
        let json = serde_json::to_string_pretty(&s).unwrap();
        let back = EncodingSchema::from_reader(json.as_bytes()).unwrap();
        assert_eq!(back, s);
    }
}
