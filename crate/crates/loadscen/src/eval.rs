//! Energy score evaluation, consumer-level cross-validation, and the
//! dataset-size scaling experiment.
//!
//! The energy score compares a set of equally likely scenario series
//! against one realized series; lower is better and the score is strictly
//! proper, so it rewards both calibration and sharpness. Folds partition
//! *consumers*, never day instances, so no consumer's days can leak between
//! train and test.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{validate_dataset, AttributeVector, Dataset, DaySeries};
use crate::error::{Error, Result};
use crate::pct::{build_tree, prune, BuildConfig, Pct, TrainStore};
use crate::scengen::{generate_scenarios, random_baseline, ScenarioSet};
use crate::seed;

/// Instances scored per generation/scoring batch; bounds transient memory
/// without affecting results (scenario draws are per-query seeded).
const EVAL_CHUNK: usize = 256;

/// Energy score of a scenario set against the realized series:
/// `(1/N) Σ_s ||t_s - t|| - (1/(2N²)) Σ_s Σ_r ||t_s - t_r||`
/// with plain Euclidean norms. Exact double sum, no approximation.
pub fn energy_score(scenarios: &[DaySeries], truth: &DaySeries) -> Result<f64> {
    if scenarios.is_empty() {
        return Err(Error::EmptyScenarios);
    }
    for s in scenarios {
        if s.len() != truth.len() {
            return Err(Error::SeriesLength {
                expected: truth.len(),
                actual: s.len(),
            });
        }
    }
    let n = scenarios.len() as f64;
    let spread_term: f64 = scenarios.iter().map(|s| s.dist(truth)).sum::<f64>() / n;
    let mut pair_sum = 0.0;
    for (i, a) in scenarios.iter().enumerate() {
        for b in &scenarios[i + 1..] {
            pair_sum += a.dist(b);
        }
    }
    // each unordered pair appears twice in the double sum
    Ok(spread_term - pair_sum / (n * n))
}

/// Consumer-to-fold assignment for grouped cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    map: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, consumer_id: &str) -> Option<usize> {
        self.map.get(consumer_id).copied()
    }

    pub fn consumers_in(&self, fold: usize) -> Vec<&str> {
        self.map
            .iter()
            .filter_map(|(c, &f)| (f == fold).then_some(c.as_str()))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.map.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffle the unique consumers with the given seed and deal them
/// round-robin over `k` folds, so fold sizes differ by at most one.
pub fn make_folds(consumer_ids: &[String], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig("k must be >= 2".to_owned()));
    }
    let mut unique: Vec<&String> = {
        let set: std::collections::BTreeSet<&String> = consumer_ids.iter().collect();
        set.into_iter().collect()
    };
    if unique.len() < k {
        return Err(Error::InvalidConfig(format!(
            "need at least {k} consumers for {k} folds, have {}",
            unique.len()
        )));
    }
    let mut rng = seed::rng_from(seed::derive(seed, &[seed::PURPOSE_FOLDS]));
    unique.shuffle(&mut rng);
    let map = unique
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i % k))
        .collect();
    Ok(FoldAssignment { k, seed, map })
}

/// Which scenario generator a report row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pct,
    Random,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Pct => write!(f, "pct"),
            Method::Random => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pct" => Ok(Method::Pct),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected pct or random)"
            ))),
        }
    }
}

/// Everything one train/evaluate pass needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tree: BuildConfig,
    /// Consumer fraction of the training fold held out for pruning.
    pub prune_fraction: f64,
    pub n_scenarios: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tree: BuildConfig::default(),
            prune_fraction: 0.25,
            n_scenarios: 250,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub n_train_instances: usize,
    pub n_build_instances: usize,
    pub n_prune_instances: usize,
    pub n_test_instances: usize,
}

/// Score of one test instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceScore {
    pub consumer_id: String,
    pub date: NaiveDate,
    pub leaf_id: Option<usize>,
    pub es: f64,
}

/// One (fold, method) evaluation: mean energy score, per-instance scores,
/// and wall-clock train/predict times. Timing covers in-memory work only;
/// file I/O happens outside these phases.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub fold_id: usize,
    pub method: Method,
    pub mean_es: f64,
    pub train_time_s: f64,
    pub predict_time_s: f64,
    pub counts: EvalCounts,
    pub per_instance: Vec<InstanceScore>,
}

/// A trained generator ready to answer queries.
pub enum FittedModel {
    Pct { tree: Pct, store: TrainStore },
    Random { store: TrainStore },
}

impl FittedModel {
    pub fn generate(
        &self,
        query: &AttributeVector,
        n_scenarios: usize,
        gen_seed: u64,
        query_index: u64,
    ) -> Result<ScenarioSet> {
        match self {
            FittedModel::Pct { tree, store } => {
                generate_scenarios(tree, store, query, n_scenarios, gen_seed, query_index)
            }
            FittedModel::Random { store } => {
                random_baseline(store, query, n_scenarios, gen_seed, query_index)
            }
        }
    }

    pub fn tree(&self) -> Option<&Pct> {
        match self {
            FittedModel::Pct { tree, .. } => Some(tree),
            FittedModel::Random { .. } => None,
        }
    }
}

/// Split a training set by consumer into build and prune subsets.
/// `prune_fraction` of the consumers (rounded, but always leaving at least
/// one consumer on each side when possible) goes to the pruning set.
pub fn split_build_prune(
    train: &Dataset,
    prune_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&prune_fraction) {
        return Err(Error::InvalidConfig(
            "prune_fraction must be in [0, 1)".to_owned(),
        ));
    }
    let mut consumers = train.consumer_ids();
    let mut rng = seed::rng_from(seed::derive(seed, &[seed::PURPOSE_BUILD_PRUNE_SPLIT]));
    consumers.shuffle(&mut rng);
    let n = consumers.len();
    let n_prune = if prune_fraction == 0.0 || n < 2 {
        0
    } else {
        ((n as f64 * prune_fraction).round() as usize).clamp(1, n - 1)
    };
    let prune_set: std::collections::BTreeSet<String> =
        consumers.iter().take(n_prune).cloned().collect();
    let build_set: std::collections::BTreeSet<String> =
        consumers.iter().skip(n_prune).cloned().collect();
    Ok((
        train.filter_consumers(&build_set),
        train.filter_consumers(&prune_set),
    ))
}

/// Train one model on `train`. For [`Method::Pct`] this is the full recipe:
/// consumer-level build/prune split, tree induction, reduced-error pruning.
pub fn fit_model(
    train: &Dataset,
    method: Method,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<(FittedModel, EvalCounts)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = EvalCounts {
        n_train_instances: train.len(),
        ..EvalCounts::default()
    };
    let model = match method {
        Method::Random => FittedModel::Random {
            store: TrainStore::from_dataset(train),
        },
        Method::Pct => {
            let (build_ds, prune_ds) = split_build_prune(train, cfg.prune_fraction, seed)?;
            counts.n_build_instances = build_ds.len();
            counts.n_prune_instances = prune_ds.len();
            let tree_cfg = BuildConfig {
                seed,
                ..cfg.tree
            };
            let tree = build_tree(&build_ds, &tree_cfg)?;
            let tree = if prune_ds.is_empty() {
                tree
            } else {
                prune(&tree, &prune_ds)?.0
            };
            FittedModel::Pct {
                tree,
                store: TrainStore::from_dataset(&build_ds),
            }
        }
    };
    Ok((model, counts))
}

/// Train on `train`, generate scenarios for every `test` instance, and
/// score them. Generation and scoring run in separate timed phases.
pub fn evaluate_split(
    train: &Dataset,
    test: &Dataset,
    method: Method,
    cfg: &EvalConfig,
    seed: u64,
    fold_id: usize,
) -> Result<EvalReport> {
    let train_started = Instant::now();
    let (model, mut counts) = fit_model(train, method, cfg, seed)?;
    let train_time_s = train_started.elapsed().as_secs_f64();
    counts.n_test_instances = test.len();

    let gen_seed = seed::derive(seed, &[fold_id as u64]);
    let mut predict_time_s = 0.0;
    let mut per_instance = Vec::with_capacity(test.len());
    let mut base = 0usize;
    while base < test.len() {
        let chunk = &test.instances[base..(base + EVAL_CHUNK).min(test.len())];
        let gen_started = Instant::now();
        let sets: Vec<ScenarioSet> = chunk
            .par_iter()
            .enumerate()
            .map(|(i, inst)| {
                model.generate(
                    &inst.attributes,
                    cfg.n_scenarios,
                    gen_seed,
                    (base + i) as u64,
                )
            })
            .collect::<Result<_>>()?;
        predict_time_s += gen_started.elapsed().as_secs_f64();
        let scores: Vec<f64> = chunk
            .par_iter()
            .zip(&sets)
            .map(|(inst, set)| energy_score(&set.scenarios, &inst.series))
            .collect::<Result<_>>()?;
        for ((inst, set), es) in chunk.iter().zip(&sets).zip(scores) {
            per_instance.push(InstanceScore {
                consumer_id: inst.consumer_id.clone(),
                date: inst.date,
                leaf_id: set.leaf_id,
                es,
            });
        }
        base += chunk.len();
    }

    let mean_es = per_instance.iter().map(|s| s.es).sum::<f64>() / per_instance.len().max(1) as f64;
    Ok(EvalReport {
        fold_id,
        method,
        mean_es,
        train_time_s,
        predict_time_s,
        counts,
        per_instance,
    })
}

/// k-fold consumer-partitioned cross-validation of one method.
pub fn cross_validate(
    dataset: &Dataset,
    k: usize,
    method: Method,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let validation = validate_dataset(dataset);
    if !validation.is_valid() {
        return Err(Error::InvalidConfig(format!(
            "dataset failed validation: {validation}"
        )));
    }
    let consumers = dataset.consumer_ids();
    let folds = make_folds(&consumers, k, seed)?;
    let mut reports = Vec::with_capacity(k);
    for fold in 0..k {
        let test_consumers: std::collections::BTreeSet<String> = folds
            .consumers_in(fold)
            .into_iter()
            .map(str::to_owned)
            .collect();
        let train_consumers: std::collections::BTreeSet<String> = consumers
            .iter()
            .filter(|c| !test_consumers.contains(*c))
            .cloned()
            .collect();
        let test = dataset.filter_consumers(&test_consumers);
        let train = dataset.filter_consumers(&train_consumers);
        reports.push(evaluate_split(&train, &test, method, cfg, seed, fold)?);
    }
    Ok(reports)
}

/// One row of the dataset-size scaling table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n_train_consumers: usize,
    pub method: Method,
    pub n_train_instances: usize,
    pub mean_es: f64,
    pub train_time_s: f64,
    pub predict_time_s: f64,
}

/// Train both methods on nested consumer subsets of increasing size and
/// evaluate each on one fixed held-out test set.
///
/// The test consumers are drawn first; training subsets come from the
/// remaining pool so train and test stay disjoint by consumer, and each
/// smaller training set is a prefix (subset) of the next.
pub fn size_scaling_experiment(
    dataset: &Dataset,
    train_sizes: &[usize],
    n_test_consumers: usize,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<Vec<ScalingRow>> {
    if train_sizes.is_empty() {
        return Err(Error::InvalidConfig("no training sizes given".to_owned()));
    }
    if train_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(
            "training sizes must be strictly ascending".to_owned(),
        ));
    }
    if n_test_consumers == 0 {
        return Err(Error::InvalidConfig(
            "need at least one test consumer".to_owned(),
        ));
    }
    let mut consumers = dataset.consumer_ids();
    let mut rng = seed::rng_from(seed::derive(seed, &[seed::PURPOSE_SCALING]));
    consumers.shuffle(&mut rng);
    let max_size = *train_sizes.last().unwrap();
    if n_test_consumers + max_size > consumers.len() {
        return Err(Error::InvalidConfig(format!(
            "need {} consumers ({} test + {} train), dataset has {}",
            n_test_consumers + max_size,
            n_test_consumers,
            max_size,
            consumers.len()
        )));
    }
    let test_set: std::collections::BTreeSet<String> =
        consumers.iter().take(n_test_consumers).cloned().collect();
    let pool: Vec<String> = consumers.into_iter().skip(n_test_consumers).collect();
    let test = dataset.filter_consumers(&test_set);

    let mut rows = Vec::with_capacity(train_sizes.len() * 2);
    for (i, &size) in train_sizes.iter().enumerate() {
        let subset: std::collections::BTreeSet<String> = pool.iter().take(size).cloned().collect();
        let train = dataset.filter_consumers(&subset);
        for method in [Method::Pct, Method::Random] {
            let report = evaluate_split(&train, &test, method, cfg, seed, i)?;
            rows.push(ScalingRow {
                n_train_consumers: size,
                method,
                n_train_instances: report.counts.n_train_instances,
                mean_es: report.mean_es,
                train_time_s: report.train_time_s,
                predict_time_s: report.predict_time_s,
            });
        }
    }
    Ok(rows)
}

/// Leading comment line written to every report CSV.
const REPORT_TIMING_NOTE: &str =
    "# timings are wall-clock seconds for the in-memory train and predict phases; file I/O is excluded";

/// Write fold reports as CSV: `fold,method,n_train_instances,mean_es,train_s,predict_s`.
pub fn write_report_csv<W: Write>(mut writer: W, reports: &[EvalReport]) -> Result<()> {
    writeln!(writer, "{REPORT_TIMING_NOTE}")?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fold", "method", "n_train_instances", "mean_es", "train_s", "predict_s"])?;
    for r in reports {
        w.write_record(&[
            r.fold_id.to_string(),
            r.method.to_string(),
            r.counts.n_train_instances.to_string(),
            r.mean_es.to_string(),
            r.train_time_s.to_string(),
            r.predict_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_report_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    write_report_csv(std::io::BufWriter::new(std::fs::File::create(path)?), reports)
}

/// Write per-instance scores: `fold,method,consumer_id,date,leaf_id,es`.
pub fn write_per_instance_csv<W: Write>(writer: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fold", "method", "consumer_id", "date", "leaf_id", "es"])?;
    for r in reports {
        for s in &r.per_instance {
            w.write_record(&[
                r.fold_id.to_string(),
                r.method.to_string(),
                s.consumer_id.clone(),
                s.date.to_string(),
                s.leaf_id.map_or((-1i64).to_string(), |l| l.to_string()),
                s.es.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_per_instance_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    write_per_instance_csv(std::io::BufWriter::new(std::fs::File::create(path)?), reports)
}

/// Write scaling rows: `n_train_consumers,method,n_train_instances,mean_es,train_s,predict_s`.
pub fn write_scaling_csv<W: Write>(mut writer: W, rows: &[ScalingRow]) -> Result<()> {
    writeln!(writer, "{REPORT_TIMING_NOTE}")?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "n_train_consumers",
        "method",
        "n_train_instances",
        "mean_es",
        "train_s",
        "predict_s",
    ])?;
    for r in rows {
        w.write_record(&[
            r.n_train_consumers.to_string(),
            r.method.to_string(),
            r.n_train_instances.to_string(),
            r.mean_es.to_string(),
            r.train_time_s.to_string(),
            r.predict_time_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scaling_csv(path: &Path, rows: &[ScalingRow]) -> Result<()> {
    write_scaling_csv(std::io::BufWriter::new(std::fs::File::create(path)?), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttrKind, AttributeDef, AttributeSchema, DayInstance};

    fn s(values: &[f64]) -> DaySeries {
        DaySeries::new(values.to_vec())
    }

    #[test]
    fn perfect_point_mass_scores_zero() {
        let truth = s(&[1.0, 2.0, 3.0]);
        let scenarios = vec![truth.clone(), truth.clone(), truth.clone()];
        assert_eq!(energy_score(&scenarios, &truth).unwrap(), 0.0);
    }

    #[test]
    fn hand_expanded_two_scenario_case() {
        // spread term (0 + 5)/2 = 2.5; pair term (0+5+5+0)/(2*4) = 1.25
        let truth = s(&[0.0, 0.0]);
        let scenarios = vec![s(&[0.0, 0.0]), s(&[3.0, 4.0])];
        let es = energy_score(&scenarios, &truth).unwrap();
        assert!((es - 1.25).abs() <= 1e-12, "got {es}");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let truth = s(&[0.0, 0.0]);
        let scenarios = vec![s(&[1.0])];
        assert!(matches!(
            energy_score(&scenarios, &truth),
            Err(Error::SeriesLength { .. })
        ));
    }

    /// Literal transcription of the formula with full double loops.
    fn naive_energy_score(scenarios: &[DaySeries], truth: &DaySeries) -> f64 {
        let n = scenarios.len() as f64;
        let mut first = 0.0;
        for sc in scenarios {
            first += sc.dist(truth);
        }
        let mut second = 0.0;
        for a in scenarios {
            for b in scenarios {
                second += a.dist(b);
            }
        }
        first / n - second / (2.0 * n * n)
    }

    #[test]
    fn matches_naive_double_loop_on_random_cases() {
        let mut state = 0x853c_49e6_748f_ea9bu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 6.0 - 3.0
        };
        for _ in 0..100 {
            let truth = DaySeries::new((0..5).map(|_| next()).collect());
            let scenarios: Vec<DaySeries> = (0..7)
                .map(|_| DaySeries::new((0..5).map(|_| next()).collect()))
                .collect();
            let fast = energy_score(&scenarios, &truth).unwrap();
            let slow = naive_energy_score(&scenarios, &truth);
            assert!((fast - slow).abs() <= 1e-12, "{fast} vs {slow}");
        }
    }

    #[test]
    fn duplicating_the_scenario_multiset_changes_nothing() {
        let truth = s(&[1.0, -2.0]);
        let scenarios = vec![s(&[0.0, 0.0]), s(&[2.0, 1.0]), s(&[1.5, -2.5])];
        let mut doubled = scenarios.clone();
        doubled.extend(scenarios.iter().cloned());
        let a = energy_score(&scenarios, &truth).unwrap();
        let b = energy_score(&doubled, &truth).unwrap();
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn ten_consumers_five_folds_gives_pairs() {
        let ids: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let folds = make_folds(&ids, 5, 1).unwrap();
        assert_eq!(folds.fold_sizes(), vec![2, 2, 2, 2, 2]);
    }

    #[test]
    fn eleven_consumers_five_folds_remainder_goes_first() {
        let ids: Vec<String> = (0..11).map(|i| format!("c{i}")).collect();
        let folds = make_folds(&ids, 5, 1).unwrap();
        let mut sizes = folds.fold_sizes();
        assert_eq!(sizes.remove(0), 3);
        assert_eq!(sizes, vec![2, 2, 2, 2]);
    }

    #[test]
    fn fold_assignment_is_seed_deterministic() {
        let ids: Vec<String> = (0..23).map(|i| format!("c{i}")).collect();
        assert_eq!(make_folds(&ids, 5, 9).unwrap(), make_folds(&ids, 5, 9).unwrap());
        assert_ne!(make_folds(&ids, 5, 9).unwrap(), make_folds(&ids, 5, 10).unwrap());
    }

    #[test]
    fn fewer_consumers_than_folds_is_an_error() {
        let ids: Vec<String> = (0..3).map(|i| format!("c{i}")).collect();
        assert!(make_folds(&ids, 5, 0).is_err());
    }

    fn toy_dataset(n_consumers: usize, days_per_consumer: usize) -> Dataset {
        let schema = AttributeSchema::new(vec![
            AttributeDef::new("group", AttrKind::Consumer),
            AttributeDef::new("noise", AttrKind::Consumer),
        ]);
        let mut instances = Vec::new();
        for c in 0..n_consumers {
            let group = f64::from(c as u32 % 2);
            for d in 0..days_per_consumer {
                instances.push(DayInstance {
                    consumer_id: format!("c{c:03}"),
                    date: NaiveDate::from_ymd_opt(2013, 1, 1).unwrap()
                        + chrono::Duration::days(d as i64),
                    attributes: AttributeVector::new(vec![group, f64::from(c as u32)]),
                    series: DaySeries::new(vec![group * 10.0, 1.0 + 0.01 * d as f64]),
                });
            }
        }
        Dataset::new(schema, 2, instances)
    }

    #[test]
    fn cross_validation_partitions_consumers_without_leakage() {
        let ds = toy_dataset(10, 4);
        let cfg = EvalConfig {
            tree: BuildConfig {
                max_depth: 3,
                min_leaf: 2,
                seed: 0,
            },
            prune_fraction: 0.25,
            n_scenarios: 8,
        };
        let reports = cross_validate(&ds, 5, Method::Pct, &cfg, 11).unwrap();
        assert_eq!(reports.len(), 5);
        let folds = make_folds(&ds.consumer_ids(), 5, 11).unwrap();
        let mut seen_test: Vec<String> = Vec::new();
        for r in &reports {
            let test_consumers: std::collections::BTreeSet<String> = r
                .per_instance
                .iter()
                .map(|s| s.consumer_id.clone())
                .collect();
            for c in &test_consumers {
                assert_eq!(folds.fold_of(c), Some(r.fold_id));
                seen_test.push(c.clone());
            }
            assert_eq!(r.counts.n_test_instances, r.per_instance.len());
            assert_eq!(
                r.counts.n_train_instances + r.counts.n_test_instances,
                ds.len()
            );
        }
        seen_test.sort();
        seen_test.dedup();
        assert_eq!(seen_test, ds.consumer_ids());
    }

    #[test]
    fn mean_es_is_the_mean_of_per_instance_scores() {
        let ds = toy_dataset(8, 5);
        let cfg = EvalConfig {
            tree: BuildConfig {
                max_depth: 2,
                min_leaf: 2,
                seed: 0,
            },
            prune_fraction: 0.0,
            n_scenarios: 6,
        };
        let reports = cross_validate(&ds, 4, Method::Random, &cfg, 3).unwrap();
        for r in &reports {
            let mean = r.per_instance.iter().map(|s| s.es).sum::<f64>()
                / r.per_instance.len() as f64;
            assert!((mean - r.mean_es).abs() <= 1e-12);
        }
    }

    #[test]
    fn scaling_experiment_nests_training_subsets() {
        let ds = toy_dataset(30, 3);
        let cfg = EvalConfig {
            tree: BuildConfig {
                max_depth: 2,
                min_leaf: 2,
                seed: 0,
            },
            prune_fraction: 0.0,
            n_scenarios: 4,
        };
        let rows = size_scaling_experiment(&ds, &[10, 20], 5, &cfg, 7).unwrap();
        assert_eq!(rows.len(), 4);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].method, Method::Pct);
            assert_eq!(pair[1].method, Method::Random);
        }
        // nesting: instances of the size-10 run are a subset of the size-20 run
        assert!(rows[0].n_train_instances < rows[2].n_train_instances);
        assert!(rows.iter().all(|r| r.train_time_s > 0.0 && r.predict_time_s > 0.0));
    }

    #[test]
    fn scaling_experiment_rejects_oversized_requests() {
        let ds = toy_dataset(10, 2);
        let cfg = EvalConfig::default();
        assert!(size_scaling_experiment(&ds, &[20], 5, &cfg, 0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn es_is_nonnegative_and_permutation_invariant(
            truth in proptest::collection::vec(-5.0f64..5.0, 4),
            scen in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 4), 1..12),
            swap in (0usize..12, 0usize..12),
        ) {
            let truth = DaySeries::new(truth);
            let scenarios: Vec<DaySeries> = scen.into_iter().map(DaySeries::new).collect();
            let es = energy_score(&scenarios, &truth).unwrap();
            proptest::prop_assert!(es >= -1e-12);
            let mut shuffled = scenarios.clone();
            let (i, j) = (swap.0 % shuffled.len(), swap.1 % shuffled.len());
            shuffled.swap(i, j);
            let es2 = energy_score(&shuffled, &truth).unwrap();
            proptest::prop_assert!((es - es2).abs() <= 1e-12);
        }
    }
}
