//! Predictive clustering tree: induction, reduced-error pruning, routing.
//!
//! Induction is greedy top-down. At every node the best binary split
//! `attribute < threshold` is the one maximizing the variance reduction of
//! the member series, subject to `min_leaf` on both children and `max_depth`
//! on the path. Attribute scans run in parallel; the winner is reduced in
//! attribute order with ties broken by (attribute_index, threshold)
//! ascending, so the tree is identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, AttributeVector, Dataset, DaySeries};
use crate::error::{Error, Result};
use crate::variance::{split_scan, NodeStats};

/// Tree-growing constraints. The seed is carried along for provenance; the
/// induction itself is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        // library defaults: depth 12, 300 samples per leaf
        BuildConfig {
            max_depth: 12,
            min_leaf: 300,
            seed: 0,
        }
    }
}

/// A winning split: attribute, threshold, and its variance reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub attribute_index: usize,
    pub threshold: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub attribute_index: usize,
    pub threshold: f64,
    /// Child node ids; left holds `attribute < threshold`.
    pub left: usize,
    pub right: usize,
    pub stats: NodeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafNode {
    /// Row indices into the training dataset this tree was built from.
    pub members: Vec<u32>,
    pub stats: NodeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split(SplitNode),
    Leaf(LeafNode),
}

/// The series pool a tree's leaf members index into. Sampling a scenario is
/// a lookup here, which is what guarantees generated scenarios are verbatim
/// training days.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainStore {
    keys: Vec<(String, chrono::NaiveDate)>,
    series: Vec<DaySeries>,
}

impl TrainStore {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        TrainStore {
            keys: dataset
                .instances
                .iter()
                .map(|i| (i.consumer_id.clone(), i.date))
                .collect(),
            series: dataset.instances.iter().map(|i| i.series.clone()).collect(),
        }
    }

    pub fn from_parts(keys: Vec<(String, chrono::NaiveDate)>, series: Vec<DaySeries>) -> Self {
        debug_assert_eq!(keys.len(), series.len());
        TrainStore { keys, series }
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series(&self, row: u32) -> &DaySeries {
        &self.series[row as usize]
    }

    pub fn key(&self, row: u32) -> &(String, chrono::NaiveDate) {
        &self.keys[row as usize]
    }

    pub fn keys(&self) -> &[(String, chrono::NaiveDate)] {
        &self.keys
    }

    pub fn all_series(&self) -> &[DaySeries] {
        &self.series
    }
}

/// A trained predictive clustering tree. Nodes are stored pre-order with the
/// root at index 0, so node ids are stable across serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Pct {
    pub schema: AttributeSchema,
    pub series_len: usize,
    pub config: BuildConfig,
    pub n_train: usize,
    pub nodes: Vec<Node>,
}

impl Pct {
    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, id: usize) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn leaf(&self, id: usize) -> Option<&LeafNode> {
        match self.nodes.get(id) {
            Some(Node::Leaf(l)) => Some(l),
            _ => None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| matches!(n, Node::Leaf(_)).then_some(i))
            .collect()
    }

    /// Route an attribute vector to its leaf; `attribute < threshold` goes
    /// left, equality goes right.
    pub fn route(&self, attributes: &AttributeVector) -> Result<usize> {
        if attributes.len() != self.schema.len() {
            return Err(Error::SchemaLength {
                expected: self.schema.len(),
                actual: attributes.len(),
            });
        }
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf(_) => return Ok(id),
                Node::Split(s) => {
                    id = if attributes.get(s.attribute_index) < s.threshold {
                        s.left
                    } else {
                        s.right
                    };
                }
            }
        }
    }

    /// Training rows reachable from `id`, ascending.
    pub fn members_below(&self, id: usize) -> Result<Vec<u32>> {
        if id >= self.nodes.len() {
            return Err(Error::UnknownNode(id));
        }
        let mut rows = Vec::new();
        let mut stack = vec![id];
        while let Some(cur) = stack.pop() {
            match &self.nodes[cur] {
                Node::Leaf(l) => rows.extend_from_slice(&l.members),
                Node::Split(s) => {
                    stack.push(s.right);
                    stack.push(s.left);
                }
            }
        }
        rows.sort_unstable();
        Ok(rows)
    }

    /// Longest number of splits on any root-to-leaf path.
    pub fn max_path_splits(&self) -> usize {
        fn depth_of(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf(_) => 0,
                Node::Split(s) => 1 + depth_of(nodes, s.left).max(depth_of(nodes, s.right)),
            }
        }
        depth_of(&self.nodes, 0)
    }

    /// Smallest member count over all leaves.
    pub fn min_leaf_members(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l.members.len()),
                Node::Split(_) => None,
            })
            .min()
            .unwrap_or(0)
    }

    /// Sum of member counts over all leaves (the leaves partition training).
    pub fn total_leaf_members(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(l) => Some(l.members.len()),
                Node::Split(_) => None,
            })
            .sum()
    }

    /// Check that `schema` is the schema this tree was trained on.
    pub fn check_schema(&self, schema: &AttributeSchema) -> Result<()> {
        if self.schema.fingerprint() != schema.fingerprint() {
            return Err(Error::SchemaHashMismatch);
        }
        Ok(())
    }
}

/// Find the best admissible split of `rows`, or `None` to make a leaf.
///
/// Scans every attribute (in parallel), requiring `min_leaf` instances on
/// both sides and `depth + 1 <= max_depth`. The winner is the maximum
/// variance reduction; exact ties go to the lowest attribute index, then the
/// lowest threshold.
pub fn best_split(
    dataset: &Dataset,
    rows: &[u32],
    config: &BuildConfig,
    depth: usize,
) -> Option<SplitCandidate> {
    if rows.is_empty() || depth >= config.max_depth || rows.len() < 2 * config.min_leaf {
        return None;
    }
    let n_attrs = dataset.schema.len();
    let per_attribute: Vec<Option<SplitCandidate>> = (0..n_attrs)
        .into_par_iter()
        .map(|k| {
            let mut keyed: Vec<(f64, u32)> = rows
                .iter()
                .map(|&r| (dataset.instances[r as usize].attributes.get(k), r))
                .collect();
            keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let sorted: Vec<(f64, &DaySeries)> = keyed
                .iter()
                .map(|&(v, r)| (v, &dataset.instances[r as usize].series))
                .collect();
            split_scan(&sorted, config.min_leaf).map(|r| SplitCandidate {
                attribute_index: k,
                threshold: r.threshold,
                h: r.h,
            })
        })
        .collect();
    per_attribute
        .into_iter()
        .flatten()
        .fold(None, |best: Option<SplitCandidate>, c| match best {
            None => Some(c),
            Some(b) if c.h > b.h => Some(c),
            Some(b) => Some(b),
        })
}

/// Grow a tree on `train` by recursive splitting. Deterministic given
/// (train, config) regardless of thread count.
pub fn build_tree(train: &Dataset, config: &BuildConfig) -> Result<Pct> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if config.min_leaf == 0 {
        return Err(Error::InvalidConfig("min_leaf must be >= 1".to_owned()));
    }
    let mut tree = Pct {
        schema: train.schema.clone(),
        series_len: train.series_len,
        config: *config,
        n_train: train.len(),
        nodes: Vec::new(),
    };
    let rows: Vec<u32> = (0..train.len() as u32).collect();
    grow(&mut tree, train, rows, 0, config);
    Ok(tree)
}

fn node_stats(dataset: &Dataset, rows: &[u32]) -> NodeStats {
    NodeStats::from_series(
        dataset.series_len,
        rows.iter().map(|&r| &dataset.instances[r as usize].series),
    )
}

fn grow(tree: &mut Pct, dataset: &Dataset, rows: Vec<u32>, depth: usize, config: &BuildConfig) -> usize {
    let stats = node_stats(dataset, &rows);
    let id = tree.nodes.len();
    match best_split(dataset, &rows, config, depth) {
        Some(split) => {
            let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows.into_iter().partition(|&r| {
                dataset.instances[r as usize].attributes.get(split.attribute_index)
                    < split.threshold
            });
            tree.nodes.push(Node::Split(SplitNode {
                attribute_index: split.attribute_index,
                threshold: split.threshold,
                left: 0,
                right: 0,
                stats,
            }));
            let left = grow(tree, dataset, left_rows, depth + 1, config);
            let right = grow(tree, dataset, right_rows, depth + 1, config);
            if let Node::Split(s) = &mut tree.nodes[id] {
                s.left = left;
                s.right = right;
            }
            id
        }
        None => {
            tree.nodes.push(Node::Leaf(LeafNode { members: rows, stats }));
            id
        }
    }
}

/// What reduced-error pruning did to a tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub nodes_before: usize,
    pub nodes_after: usize,
    /// Internal nodes collapsed while reached by zero pruning instances.
    pub zero_reach_collapsed: usize,
    /// Total pruning-set error before/after: squared distance from each
    /// pruning series to the training centroid of the leaf it reaches.
    pub err_before: f64,
    pub err_after: f64,
    /// The pruning set was empty; the tree collapsed to its root leaf.
    pub empty_prune_set: bool,
}

/// Reduced-error pruning against a held-out pruning set.
///
/// Bottom-up: a subtree is replaced by a leaf (the union of its training
/// members) whenever predicting the subtree root's training centroid does
/// not increase total squared error on the pruning instances routed there.
/// Subtrees reached by no pruning instance carry no evidence and collapse.
pub fn prune(tree: &Pct, prune_set: &Dataset) -> Result<(Pct, PruneReport)> {
    if prune_set.schema.fingerprint() != tree.schema.fingerprint() {
        return Err(Error::SchemaHashMismatch);
    }
    if prune_set.series_len != tree.series_len {
        return Err(Error::SeriesLength {
            expected: tree.series_len,
            actual: prune_set.series_len,
        });
    }

    let n_nodes = tree.nodes.len();
    let mut err_leaf = vec![0.0f64; n_nodes];
    let mut reach = vec![0usize; n_nodes];
    let centroids: Vec<Option<DaySeries>> = tree
        .nodes
        .iter()
        .map(|n| match n {
            Node::Split(s) => s.stats.centroid(),
            Node::Leaf(l) => l.stats.centroid(),
        })
        .collect();

    for inst in &prune_set.instances {
        let mut id = 0;
        loop {
            reach[id] += 1;
            if let Some(c) = &centroids[id] {
                err_leaf[id] += inst.series.sq_dist(c);
            }
            match &tree.nodes[id] {
                Node::Leaf(_) => break,
                Node::Split(s) => {
                    id = if inst.attributes.get(s.attribute_index) < s.threshold {
                        s.left
                    } else {
                        s.right
                    };
                }
            }
        }
    }

    // Pre-order storage puts children after parents, so a reverse pass is
    // bottom-up. best[id] = minimum achievable error of the pruned subtree.
    let mut best = vec![0.0f64; n_nodes];
    let mut collapse = vec![false; n_nodes];
    let mut err_orig = vec![0.0f64; n_nodes];
    for id in (0..n_nodes).rev() {
        match &tree.nodes[id] {
            Node::Leaf(_) => {
                best[id] = err_leaf[id];
                err_orig[id] = err_leaf[id];
            }
            Node::Split(s) => {
                let subtree = best[s.left] + best[s.right];
                err_orig[id] = err_orig[s.left] + err_orig[s.right];
                if err_leaf[id] <= subtree {
                    collapse[id] = true;
                    best[id] = err_leaf[id];
                } else {
                    best[id] = subtree;
                }
            }
        }
    }

    let mut pruned = Pct {
        schema: tree.schema.clone(),
        series_len: tree.series_len,
        config: tree.config,
        n_train: tree.n_train,
        nodes: Vec::new(),
    };
    let mut zero_reach_collapsed = 0;
    rebuild(
        tree,
        0,
        &collapse,
        &reach,
        &mut pruned,
        &mut zero_reach_collapsed,
    )?;

    let report = PruneReport {
        nodes_before: n_nodes,
        nodes_after: pruned.nodes.len(),
        zero_reach_collapsed,
        err_before: err_orig[0],
        err_after: best[0],
        empty_prune_set: prune_set.is_empty(),
    };
    Ok((pruned, report))
}

fn rebuild(
    tree: &Pct,
    id: usize,
    collapse: &[bool],
    reach: &[usize],
    out: &mut Pct,
    zero_reach: &mut usize,
) -> Result<usize> {
    let new_id = out.nodes.len();
    match &tree.nodes[id] {
        Node::Leaf(l) => {
            out.nodes.push(Node::Leaf(l.clone()));
            Ok(new_id)
        }
        Node::Split(s) => {
            if collapse[id] {
                if reach[id] == 0 {
                    *zero_reach += 1;
                }
                let members = tree.members_below(id)?;
                out.nodes.push(Node::Leaf(LeafNode {
                    members,
                    stats: s.stats.clone(),
                }));
                Ok(new_id)
            } else {
                out.nodes.push(Node::Split(s.clone()));
                let left = rebuild(tree, s.left, collapse, reach, out, zero_reach)?;
                let right = rebuild(tree, s.right, collapse, reach, out, zero_reach)?;
                if let Node::Split(ns) = &mut out.nodes[new_id] {
                    ns.left = left;
                    ns.right = right;
                }
                Ok(new_id)
            }
        }
    }
}
