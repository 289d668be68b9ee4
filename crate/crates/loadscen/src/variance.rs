//! Variance mathematics for clusters of daylong series, and the incremental
//! statistics that make split scanning linear.
//!
//! Under the Euclidean distance the centroid of a cluster is the pointwise
//! mean, so the cluster variance (mean squared distance to the centroid) has
//! the closed form `sumsq/n - ||sum/n||²` over the running sums kept in
//! [`NodeStats`]. The quadratic pairwise form is kept only as an independent
//! route for tests: both compute the same quantity.

use serde::{Deserialize, Serialize};

use crate::dataset::DaySeries;
use crate::error::{Error, Result};

/// Minimum useful variance reduction; anything at or below is "no split".
pub const EPS_H: f64 = 1e-12;

/// Relative tolerance for the cancellation-prone closed-form variance.
pub const EPS_NUM: f64 = 1e-9;

/// Running sufficient statistics of a node: instance count, pointwise sum,
/// and total squared norm. Supports O(T) add/remove, which is what lets a
/// split scan move one instance across the boundary per candidate.
///
/// `sumsq` is accumulated with Neumaier compensation; the closed-form
/// variance subtracts two nearly equal quantities for tight clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    n: usize,
    sum: Vec<f64>,
    sumsq: f64,
    #[serde(skip)]
    sumsq_comp: f64,
}

impl NodeStats {
    pub fn new(series_len: usize) -> Self {
        NodeStats {
            n: 0,
            sum: vec![0.0; series_len],
            sumsq: 0.0,
            sumsq_comp: 0.0,
        }
    }

    pub fn from_series<'a, I>(series_len: usize, series: I) -> Self
    where
        I: IntoIterator<Item = &'a DaySeries>,
    {
        let mut stats = NodeStats::new(series_len);
        for s in series {
            stats.add(s);
        }
        stats
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn series_len(&self) -> usize {
        self.sum.len()
    }

    pub fn add(&mut self, series: &DaySeries) {
        debug_assert_eq!(series.len(), self.sum.len());
        self.n += 1;
        let mut sq = 0.0;
        for (acc, v) in self.sum.iter_mut().zip(series.values()) {
            *acc += v;
            sq += v * v;
        }
        self.accumulate_sumsq(sq);
    }

    pub fn remove(&mut self, series: &DaySeries) {
        debug_assert!(self.n > 0);
        debug_assert_eq!(series.len(), self.sum.len());
        self.n -= 1;
        let mut sq = 0.0;
        for (acc, v) in self.sum.iter_mut().zip(series.values()) {
            *acc -= v;
            sq += v * v;
        }
        self.accumulate_sumsq(-sq);
    }

    // Neumaier compensated accumulation.
    fn accumulate_sumsq(&mut self, value: f64) {
        let t = self.sumsq + value;
        if self.sumsq.abs() >= value.abs() {
            self.sumsq_comp += (self.sumsq - t) + value;
        } else {
            self.sumsq_comp += (value - t) + self.sumsq;
        }
        self.sumsq = t;
    }

    fn sumsq_total(&self) -> f64 {
        self.sumsq + self.sumsq_comp
    }

    /// Pointwise mean of the member series; `None` for an empty node.
    pub fn centroid(&self) -> Option<DaySeries> {
        if self.n == 0 {
            return None;
        }
        let inv = 1.0 / self.n as f64;
        Some(DaySeries::new(self.sum.iter().map(|s| s * inv).collect()))
    }

    /// Closed-form cluster variance `sumsq/n - ||sum/n||²`, clamped at 0.
    ///
    /// The subtraction can go slightly negative for near-degenerate
    /// clusters; mathematically the value is >= 0, so small negatives are
    /// numerical noise and clamped.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let inv = 1.0 / self.n as f64;
        let mean_norm_sq: f64 = self.sum.iter().map(|s| (s * inv) * (s * inv)).sum();
        let raw = self.sumsq_total() * inv - mean_norm_sq;
        debug_assert!(raw >= -EPS_NUM * (self.sumsq_total() * inv).max(1.0));
        raw.max(0.0)
    }

    /// Total squared deviation `n * variance`; the pruning error unit.
    pub fn total_sq_dev(&self) -> f64 {
        self.variance() * self.n as f64
    }
}

/// Cluster variance as the mean squared distance to the pointwise-mean
/// centroid. Linear in the number of instances.
pub fn variance_centroid(series: &[DaySeries]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyNode);
    }
    let t = series[0].len();
    let inv = 1.0 / series.len() as f64;
    let mut centroid = vec![0.0; t];
    for s in series {
        for (c, v) in centroid.iter_mut().zip(s.values()) {
            *c += v;
        }
    }
    for c in &mut centroid {
        *c *= inv;
    }
    let mut acc = 0.0;
    for s in series {
        let mut d = 0.0;
        for (c, v) in centroid.iter().zip(s.values()) {
            d += (v - c) * (v - c);
        }
        acc += d;
    }
    Ok(acc * inv)
}

/// Cluster variance as the normalized sum of squared pairwise distances,
/// `(1/(2n²)) Σᵢ Σⱼ dist(tᵢ,tⱼ)²`. Quadratic; kept as the independent test
/// route, never used in the split scan.
pub fn variance_pairwise(series: &[DaySeries]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptyNode);
    }
    let n = series.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            acc += series[i].sq_dist(&series[j]);
        }
    }
    // off-diagonal pairs counted once above; the double sum counts them twice
    Ok(acc / (n * n) as f64)
}

/// Best threshold found by [`split_scan`] for one attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanResult {
    pub threshold: f64,
    /// Variance reduction of the parent achieved by this threshold.
    pub h: f64,
    /// Instances strictly below the threshold.
    pub n_left: usize,
}

/// Sweep all candidate thresholds for one attribute in a single pass.
///
/// `sorted` must be ascending by attribute value. Candidate thresholds are
/// midpoints between consecutive distinct values; each step moves one
/// instance across the boundary in O(T). Returns the candidate maximizing
/// the variance reduction `h = var(parent) - Σ (|child|/|parent|)·var(child)`,
/// or `None` when no candidate has `h > EPS_H` and `min_leaf` on both sides.
/// Ties keep the lowest threshold.
pub fn split_scan(sorted: &[(f64, &DaySeries)], min_leaf: usize) -> Option<ScanResult> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    debug_assert!(sorted.windows(2).all(|w| w[0].0 <= w[1].0));
    let t = sorted[0].1.len();

    let mut right = NodeStats::from_series(t, sorted.iter().map(|(_, s)| *s));
    let parent_var = right.variance();
    let parent_n = n as f64;
    let mut left = NodeStats::new(t);

    let mut best: Option<ScanResult> = None;
    for i in 1..n {
        let series = sorted[i - 1].1;
        left.add(series);
        right.remove(series);

        let (lo, hi) = (sorted[i - 1].0, sorted[i].0);
        if lo == hi {
            continue;
        }
        if i < min_leaf || n - i < min_leaf {
            continue;
        }
        let threshold = lo + (hi - lo) / 2.0;
        // consecutive representable doubles have no strictly-between midpoint
        if !(threshold > lo && threshold < hi) {
            continue;
        }
        let h = parent_var
            - (i as f64 / parent_n) * left.variance()
            - ((n - i) as f64 / parent_n) * right.variance();
        if h > EPS_H && best.is_none_or(|b| h > b.h) {
            best = Some(ScanResult {
                threshold,
                h,
                n_left: i,
            });
        }
    }
    best
}
