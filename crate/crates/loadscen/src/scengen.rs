//! Scenario generation: leaf sampling from a trained tree, and the
//! attribute-blind random baseline.
//!
//! Both samplers draw uniformly with replacement from a pool of real
//! training days, so every generated scenario is a measured series, never a
//! synthetic average. Draws come from a per-query stream seeded by (seed,
//! attribute hash, query index) — batch order and parallelism cannot change
//! any query's scenarios.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::dataset::{AttributeVector, DaySeries};
use crate::error::{Error, Result};
use crate::pct::{Pct, TrainStore};
use crate::seed;

/// `leaf_id` written to scenario CSVs for the attribute-blind baseline.
pub const BASELINE_LEAF_ID: i64 = -1;

/// A batch of sampled scenarios for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub query: AttributeVector,
    /// Leaf that produced the sample; `None` for the random baseline.
    pub leaf_id: Option<usize>,
    /// Derived stream seed the draws came from.
    pub stream_seed: u64,
    pub scenarios: Vec<DaySeries>,
}

/// Route `query` to a leaf and sample `n_scenarios` member series
/// uniformly with replacement.
pub fn generate_scenarios(
    tree: &Pct,
    store: &TrainStore,
    query: &AttributeVector,
    n_scenarios: usize,
    seed: u64,
    query_index: u64,
) -> Result<ScenarioSet> {
    if n_scenarios == 0 {
        return Err(Error::InvalidConfig("n_scenarios must be >= 1".to_owned()));
    }
    if store.len() != tree.n_train {
        return Err(Error::ModelFormat(format!(
            "training store has {} series but the model was trained on {}",
            store.len(),
            tree.n_train
        )));
    }
    let leaf_id = tree.route(query)?;
    let members = &tree
        .leaf(leaf_id)
        .expect("route always lands on a leaf")
        .members;
    debug_assert!(!members.is_empty());
    let stream_seed = seed::derive_query(seed, query, query_index);
    let mut rng = seed::rng_from(stream_seed);
    let scenarios = (0..n_scenarios)
        .map(|_| {
            let pick = members[rng.random_range(0..members.len() as u64) as usize];
            store.series(pick).clone()
        })
        .collect();
    Ok(ScenarioSet {
        query: query.clone(),
        leaf_id: Some(leaf_id),
        stream_seed,
        scenarios,
    })
}

/// Sample `n_scenarios` days uniformly from the whole training set,
/// ignoring the query's attributes. The query is only recorded in the
/// result; its values never touch the draw stream.
pub fn random_baseline(
    store: &TrainStore,
    query: &AttributeVector,
    n_scenarios: usize,
    seed: u64,
    query_index: u64,
) -> Result<ScenarioSet> {
    if store.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if n_scenarios == 0 {
        return Err(Error::InvalidConfig("n_scenarios must be >= 1".to_owned()));
    }
    let stream_seed = seed::derive(seed, &[seed::PURPOSE_BASELINE, query_index]);
    let mut rng = seed::rng_from(stream_seed);
    let scenarios = (0..n_scenarios)
        .map(|_| {
            let pick = rng.random_range(0..store.len() as u64) as u32;
            store.series(pick).clone()
        })
        .collect();
    Ok(ScenarioSet {
        query: query.clone(),
        leaf_id: None,
        stream_seed,
        scenarios,
    })
}

/// Write scenario sets as CSV: `query_id,scenario_id,leaf_id,v_0..v_{T-1}`.
pub fn write_scenarios_csv<W: Write>(
    writer: W,
    sets: &[(String, ScenarioSet)],
    series_len: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["query_id".to_owned(), "scenario_id".to_owned(), "leaf_id".to_owned()];
    header.extend((0..series_len).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    for (query_id, set) in sets {
        let leaf = set
            .leaf_id
            .map_or(BASELINE_LEAF_ID, |id| id as i64)
            .to_string();
        for (i, s) in set.scenarios.iter().enumerate() {
            let mut rec = vec![query_id.clone(), i.to_string(), leaf.clone()];
            rec.extend(s.values().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_scenarios_csv(
    path: &Path,
    sets: &[(String, ScenarioSet)],
    series_len: usize,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_scenarios_csv(std::io::BufWriter::new(file), sets, series_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttrKind, AttributeDef, AttributeSchema, Dataset, DayInstance};
    use crate::pct::{build_tree, BuildConfig};
    use chrono::NaiveDate;

    fn tiny_dataset(n: usize) -> Dataset {
        let schema = AttributeSchema::new(vec![AttributeDef::new("a", AttrKind::Consumer)]);
        let instances = (0..n)
            .map(|i| DayInstance {
                consumer_id: format!("c{i}"),
                date: NaiveDate::from_ymd_opt(2013, 1, 1).unwrap()
                    + chrono::Duration::days(i as i64),
                attributes: AttributeVector::new(vec![f64::from(i as u32 % 2)]),
                series: DaySeries::new(vec![f64::from(i as u32), 1.0]),
            })
            .collect();
        Dataset::new(schema, 2, instances)
    }

    #[test]
    fn singleton_leaf_yields_copies() {
        let ds = tiny_dataset(1);
        let tree = build_tree(
            &ds,
            &BuildConfig {
                max_depth: 3,
                min_leaf: 1,
                seed: 0,
            },
        )
        .unwrap();
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![0.0]);
        let set = generate_scenarios(&tree, &store, &q, 5, 7, 0).unwrap();
        assert_eq!(set.scenarios.len(), 5);
        for s in &set.scenarios {
            assert_eq!(s, &ds.instances[0].series);
        }
    }

    #[test]
    fn same_query_and_seed_reproduce_exactly() {
        let ds = tiny_dataset(20);
        let tree = build_tree(
            &ds,
            &BuildConfig {
                max_depth: 3,
                min_leaf: 2,
                seed: 0,
            },
        )
        .unwrap();
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![1.0]);
        let a = generate_scenarios(&tree, &store, &q, 50, 3, 9).unwrap();
        let b = generate_scenarios(&tree, &store, &q, 50, 3, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_scenario_is_a_verbatim_training_day() {
        let ds = tiny_dataset(30);
        let tree = build_tree(
            &ds,
            &BuildConfig {
                max_depth: 4,
                min_leaf: 3,
                seed: 0,
            },
        )
        .unwrap();
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![0.0]);
        let set = generate_scenarios(&tree, &store, &q, 100, 11, 2).unwrap();
        let leaf = tree.leaf(set.leaf_id.unwrap()).unwrap();
        for s in &set.scenarios {
            assert!(leaf
                .members
                .iter()
                .any(|&row| store.series(row) == s));
        }
    }

    #[test]
    fn baseline_on_single_instance_copies_it() {
        let ds = tiny_dataset(1);
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![0.0]);
        let set = random_baseline(&store, &q, 4, 0, 0).unwrap();
        assert_eq!(set.scenarios.len(), 4);
        assert_eq!(set.leaf_id, None);
        for s in &set.scenarios {
            assert_eq!(s, &ds.instances[0].series);
        }
    }

    #[test]
    fn baseline_is_attribute_blind() {
        let ds = tiny_dataset(10);
        let store = TrainStore::from_dataset(&ds);
        let q1 = AttributeVector::new(vec![0.0]);
        let q2 = AttributeVector::new(vec![42.0]);
        let a = random_baseline(&store, &q1, 25, 5, 3).unwrap();
        let b = random_baseline(&store, &q2, 25, 5, 3).unwrap();
        assert_eq!(a.scenarios, b.scenarios);
        assert_eq!(a.stream_seed, b.stream_seed);
    }

    #[test]
    fn baseline_draws_are_uniform() {
        // binomial oracle: over 1e5 draws from 10 instances, each frequency
        // must sit within 3 sigma of 0.1
        let ds = tiny_dataset(10);
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![0.0]);
        let n = 100_000;
        let set = random_baseline(&store, &q, n, 13, 0).unwrap();
        let mut counts = [0usize; 10];
        for s in &set.scenarios {
            let idx = s.values()[0] as usize;
            counts[idx] += 1;
        }
        let sigma = (0.1 * 0.9 / n as f64).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - 0.1).abs() <= 3.0 * sigma,
                "instance {i}: frequency {freq} outside 3 sigma"
            );
        }
    }

    #[test]
    fn query_order_does_not_change_draws() {
        let ds = tiny_dataset(12);
        let tree = build_tree(
            &ds,
            &BuildConfig {
                max_depth: 2,
                min_leaf: 2,
                seed: 0,
            },
        )
        .unwrap();
        let store = TrainStore::from_dataset(&ds);
        let queries: Vec<AttributeVector> = (0..6)
            .map(|i| AttributeVector::new(vec![f64::from(i % 2)]))
            .collect();
        let forward: Vec<ScenarioSet> = queries
            .iter()
            .enumerate()
            .map(|(i, q)| generate_scenarios(&tree, &store, q, 10, 21, i as u64).unwrap())
            .collect();
        let mut reversed: Vec<(usize, ScenarioSet)> = queries
            .iter()
            .enumerate()
            .rev()
            .map(|(i, q)| (i, generate_scenarios(&tree, &store, q, 10, 21, i as u64).unwrap()))
            .collect();
        reversed.sort_by_key(|(i, _)| *i);
        for (fwd, (_, rev)) in forward.iter().zip(&reversed) {
            assert_eq!(fwd, rev);
        }
    }

    #[test]
    fn scenario_csv_has_one_row_per_scenario() {
        let ds = tiny_dataset(3);
        let store = TrainStore::from_dataset(&ds);
        let q = AttributeVector::new(vec![0.0]);
        let set = random_baseline(&store, &q, 4, 0, 0).unwrap();
        let mut buf = Vec::new();
        write_scenarios_csv(&mut buf, &[("q0".to_owned(), set)], 2).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "query_id,scenario_id,leaf_id,v_0,v_1");
        assert!(lines[1].starts_with("q0,0,-1,"));
    }
}
