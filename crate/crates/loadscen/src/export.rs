//! Model serialization and interpretability exports: the n-ary compressed
//! display tree, per-node quantile bands, and DOT/text renderings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AttributeSchema, AttributeVector, Dataset, DaySeries};
use crate::error::{Error, Result};
use crate::pct::{BuildConfig, Node, Pct, TrainStore};

pub const MODEL_FORMAT: &str = "pct-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TrainStoreFile {
    keys: Vec<(String, chrono::NaiveDate)>,
    series: Vec<Vec<f64>>,
}

/// On-disk model document. Field order is fixed, so serialization of a
/// given tree is byte-stable.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    series_len: usize,
    schema: AttributeSchema,
    schema_hash: String,
    config: BuildConfig,
    n_train: usize,
    nodes: Vec<Node>,
    #[serde(skip_serializing_if = "Option::is_none")]
    train: Option<TrainStoreFile>,
}

/// Serialize a model, optionally embedding the training series so the file
/// alone suffices for generation. Deterministic byte output.
pub fn serialize_model(tree: &Pct, store: Option<&TrainStore>) -> Result<Vec<u8>> {
    if let Some(store) = store {
        if store.len() != tree.n_train {
            return Err(Error::ModelFormat(format!(
                "store has {} series, tree was trained on {}",
                store.len(),
                tree.n_train
            )));
        }
    }
    let file = ModelFile {
        format: MODEL_FORMAT.to_owned(),
        version: MODEL_VERSION,
        series_len: tree.series_len,
        schema: tree.schema.clone(),
        schema_hash: format!("{:016x}", tree.schema.fingerprint()),
        config: tree.config,
        n_train: tree.n_train,
        nodes: tree.nodes.clone(),
        train: store.map(|s| TrainStoreFile {
            keys: s.keys().to_vec(),
            series: s.all_series().iter().map(|d| d.values().to_vec()).collect(),
        }),
    };
    let mut bytes = serde_json::to_vec(&file)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parse a model file back into a tree and, when embedded, its store.
pub fn deserialize_model(bytes: &[u8]) -> Result<(Pct, Option<TrainStore>)> {
    let file: ModelFile = serde_json::from_slice(bytes)
        .map_err(|e| Error::ModelFormat(format!("unparseable model file: {e}")))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::ModelFormat(format!(
            "not a {MODEL_FORMAT} file (format tag {:?})",
            file.format
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported model version {} (this build reads {MODEL_VERSION})",
            file.version
        )));
    }
    let expected_hash = format!("{:016x}", file.schema.fingerprint());
    if file.schema_hash != expected_hash {
        return Err(Error::ModelFormat(
            "schema hash does not match the embedded schema".to_owned(),
        ));
    }
    if file.nodes.is_empty() {
        return Err(Error::ModelFormat("model has no nodes".to_owned()));
    }
    let tree = Pct {
        schema: file.schema,
        series_len: file.series_len,
        config: file.config,
        n_train: file.n_train,
        nodes: file.nodes,
    };
    let store = file.train.map(|t| {
        TrainStore::from_parts(
            t.keys,
            t.series.into_iter().map(DaySeries::new).collect(),
        )
    });
    if let Some(store) = &store {
        if store.len() != tree.n_train {
            return Err(Error::ModelFormat(format!(
                "embedded store has {} series, tree was trained on {}",
                store.len(),
                tree.n_train
            )));
        }
    }
    Ok((tree, store))
}

pub fn save_model(path: &Path, tree: &Pct, store: Option<&TrainStore>) -> Result<()> {
    std::fs::write(path, serialize_model(tree, store)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(Pct, Option<TrainStore>)> {
    deserialize_model(&std::fs::read(path)?)
}

// ---------------------------------------------------------------------------
// Display tree: maximal runs of same-attribute binary splits merged into one
// n-ary node with ordered interval children.
// ---------------------------------------------------------------------------

/// One child interval of an n-ary split: `lo <= attribute < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    /// Lower bound, inclusive; `-inf` encoded as `None`.
    pub lo: Option<f64>,
    /// Upper bound, exclusive; `+inf` encoded as `None`.
    pub hi: Option<f64>,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lo.is_none_or(|lo| v >= lo) && self.hi.is_none_or(|hi| v < hi)
    }

    pub fn label(&self) -> String {
        match (self.lo, self.hi) {
            (None, Some(hi)) => format!("< {hi}"),
            (Some(lo), Some(hi)) => format!("[{lo}, {hi})"),
            (Some(lo), None) => format!(">= {lo}"),
            (None, None) => "all".to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DisplayNode {
    /// n-ary split on one attribute; children are ordered by interval.
    NAry {
        attribute_index: usize,
        intervals: Vec<Interval>,
        children: Vec<usize>,
        member_count: usize,
    },
    /// Leaf pointing back at the underlying tree's leaf node id.
    Leaf { pct_leaf: usize, member_count: usize },
}

/// Semantic view of a [`Pct`] with same-attribute split runs merged. Routes
/// every query to the same leaf as the underlying tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayTree {
    pub nodes: Vec<DisplayNode>,
}

impl DisplayTree {
    pub fn root(&self) -> usize {
        0
    }

    /// Route to the underlying tree's leaf node id.
    pub fn route(&self, attributes: &AttributeVector) -> Result<usize> {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                DisplayNode::Leaf { pct_leaf, .. } => return Ok(*pct_leaf),
                DisplayNode::NAry {
                    attribute_index,
                    intervals,
                    children,
                    ..
                } => {
                    if *attribute_index >= attributes.len() {
                        return Err(Error::SchemaLength {
                            expected: attribute_index + 1,
                            actual: attributes.len(),
                        });
                    }
                    let v = attributes.get(*attribute_index);
                    let pos = intervals
                        .iter()
                        .position(|iv| iv.contains(v))
                        .expect("intervals partition the real line");
                    id = children[pos];
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, DisplayNode::Leaf { .. }))
            .count()
    }
}

/// Merge maximal same-attribute split runs of `tree` into n-ary nodes.
/// The leaf set is unchanged; only the split presentation is.
pub fn compress_tree(tree: &Pct) -> DisplayTree {
    let mut display = DisplayTree { nodes: Vec::new() };
    build_display(tree, tree.root(), &mut display);
    display
}

fn member_count(tree: &Pct, id: usize) -> usize {
    match &tree.nodes[id] {
        Node::Leaf(l) => l.members.len(),
        Node::Split(s) => s.stats.n(),
    }
}

fn build_display(tree: &Pct, id: usize, out: &mut DisplayTree) -> usize {
    match &tree.nodes[id] {
        Node::Leaf(l) => {
            let new_id = out.nodes.len();
            out.nodes.push(DisplayNode::Leaf {
                pct_leaf: id,
                member_count: l.members.len(),
            });
            new_id
        }
        Node::Split(s) => {
            // Expand the maximal same-attribute region rooted here into
            // ordered (interval, subtree root) pairs.
            let attr = s.attribute_index;
            let mut slots: Vec<(Interval, usize)> = Vec::new();
            collect_intervals(tree, id, attr, None, None, &mut slots);
            let new_id = out.nodes.len();
            out.nodes.push(DisplayNode::NAry {
                attribute_index: attr,
                intervals: Vec::new(),
                children: Vec::new(),
                member_count: member_count(tree, id),
            });
            let mut intervals = Vec::with_capacity(slots.len());
            let mut children = Vec::with_capacity(slots.len());
            for (interval, child_root) in slots {
                intervals.push(interval);
                children.push(build_display(tree, child_root, out));
            }
            if let DisplayNode::NAry {
                intervals: iv,
                children: ch,
                ..
            } = &mut out.nodes[new_id]
            {
                *iv = intervals;
                *ch = children;
            }
            new_id
        }
    }
}

fn collect_intervals(
    tree: &Pct,
    id: usize,
    attr: usize,
    lo: Option<f64>,
    hi: Option<f64>,
    out: &mut Vec<(Interval, usize)>,
) {
    match &tree.nodes[id] {
        Node::Split(s) if s.attribute_index == attr => {
            collect_intervals(tree, s.left, attr, lo, Some(s.threshold), out);
            collect_intervals(tree, s.right, attr, Some(s.threshold), hi, out);
        }
        _ => out.push((Interval { lo, hi }, id)),
    }
}

// ---------------------------------------------------------------------------
// Per-node quantile bands.
// ---------------------------------------------------------------------------

/// The levels 0.05, 0.10, ..., 0.90, 0.95.
pub fn standard_quantile_levels() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) * 0.05).collect()
}

/// Pointwise quantile curves of one node's member series.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeQuantiles {
    pub node_id: usize,
    pub levels: Vec<f64>,
    /// One curve per level, each of the members' series length.
    pub curves: Vec<DaySeries>,
    pub member_count: usize,
}

/// Empirical quantile with linear interpolation between order statistics:
/// at level p over n sorted values, `h = (n-1)p` and the result interpolates
/// between `x[floor(h)]` and `x[floor(h)+1]`.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Pointwise quantile curves for a node's members at the given levels.
pub fn node_quantiles(
    node_id: usize,
    members: &[&DaySeries],
    levels: &[f64],
) -> Result<NodeQuantiles> {
    if members.is_empty() {
        return Err(Error::EmptyMembers);
    }
    let t = members[0].len();
    let mut curves = vec![Vec::with_capacity(t); levels.len()];
    let mut column = Vec::with_capacity(members.len());
    for i in 0..t {
        column.clear();
        column.extend(members.iter().map(|m| m.values()[i]));
        column.sort_by(f64::total_cmp);
        for (curve, &p) in curves.iter_mut().zip(levels) {
            curve.push(interpolated_quantile(&column, p));
        }
    }
    Ok(NodeQuantiles {
        node_id,
        levels: levels.to_vec(),
        curves: curves.into_iter().map(DaySeries::new).collect(),
        member_count: members.len(),
    })
}

/// Quantile curves for every node of the tree (internal nodes cover all
/// training instances routed through them).
pub fn all_node_quantiles(
    tree: &Pct,
    store: &TrainStore,
    levels: &[f64],
) -> Result<Vec<NodeQuantiles>> {
    (0..tree.node_count())
        .map(|id| {
            let rows = tree.members_below(id)?;
            let members: Vec<&DaySeries> = rows.iter().map(|&r| store.series(r)).collect();
            node_quantiles(id, &members, levels)
        })
        .collect()
}

/// Write quantile curves as CSV: `node_id,level,v_0..v_{T-1}`.
pub fn write_quantiles_csv<W: Write>(
    writer: W,
    quantiles: &[NodeQuantiles],
    series_len: usize,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["node_id".to_owned(), "level".to_owned()];
    header.extend((0..series_len).map(|i| format!("v_{i}")));
    w.write_record(&header)?;
    for q in quantiles {
        for (level, curve) in q.levels.iter().zip(&q.curves) {
            let mut rec = vec![q.node_id.to_string(), level.to_string()];
            rec.extend(curve.values().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_quantiles_csv(
    path: &Path,
    quantiles: &[NodeQuantiles],
    series_len: usize,
) -> Result<()> {
    write_quantiles_csv(
        std::io::BufWriter::new(std::fs::File::create(path)?),
        quantiles,
        series_len,
    )
}

// ---------------------------------------------------------------------------
// Renderings of the compressed tree.
// ---------------------------------------------------------------------------

/// Per-node ranges of one attribute (min..max over training members), used
/// to annotate display nodes with e.g. the yearly-consumption range.
pub fn attribute_ranges(
    tree: &Pct,
    train: &Dataset,
    attribute: usize,
) -> Result<BTreeMap<usize, (f64, f64)>> {
    if train.len() != tree.n_train {
        return Err(Error::ModelFormat(format!(
            "training dataset has {} instances, tree was trained on {}",
            train.len(),
            tree.n_train
        )));
    }
    let mut ranges = BTreeMap::new();
    for id in 0..tree.node_count() {
        let rows = tree.members_below(id)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &r in &rows {
            let v = train.instances[r as usize].attributes.get(attribute);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        ranges.insert(id, (lo, hi));
    }
    Ok(ranges)
}

fn node_label(
    display: &DisplayTree,
    id: usize,
    schema: &AttributeSchema,
    yearly: Option<(&str, &BTreeMap<usize, (f64, f64)>)>,
    pct_of_display: &BTreeMap<usize, usize>,
) -> String {
    let mut label = match &display.nodes[id] {
        DisplayNode::NAry {
            attribute_index,
            member_count,
            ..
        } => format!("{}\\nn={member_count}", schema.name(*attribute_index)),
        DisplayNode::Leaf {
            pct_leaf,
            member_count,
        } => format!("leaf {pct_leaf}\\nn={member_count}"),
    };
    if let Some((name, ranges)) = yearly {
        if let Some(pct_id) = pct_of_display.get(&id) {
            if let Some((lo, hi)) = ranges.get(pct_id) {
                label.push_str(&format!("\\n{name}: {lo:.0}..{hi:.0}"));
            }
        }
    }
    label
}

/// Map display node ids back to the underlying tree's node ids.
fn display_to_pct_ids(tree: &Pct, display: &DisplayTree) -> BTreeMap<usize, usize> {
    // Rebuild the same traversal the compressor used.
    fn walk(
        tree: &Pct,
        pct_id: usize,
        display: &DisplayTree,
        display_id: usize,
        out: &mut BTreeMap<usize, usize>,
    ) {
        out.insert(display_id, pct_id);
        if let DisplayNode::NAry {
            attribute_index,
            children,
            ..
        } = &display.nodes[display_id]
        {
            let mut slots = Vec::new();
            collect_intervals(tree, pct_id, *attribute_index, None, None, &mut slots);
            for ((_, child_pct), child_display) in slots.iter().zip(children) {
                walk(tree, *child_pct, display, *child_display, out);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(tree, tree.root(), display, display.root(), &mut out);
    out
}

/// Render the compressed tree as a DOT graph. Node labels carry the split
/// attribute and member count, plus the node's `yearly_consumption` range
/// when the training data is supplied and has that column; edge labels are
/// the child intervals.
pub fn render_dot(tree: &Pct, display: &DisplayTree, train: Option<&Dataset>) -> Result<String> {
    let pct_of_display = display_to_pct_ids(tree, display);
    let yearly_ranges = match train {
        Some(train) => tree
            .schema
            .index_of("yearly_consumption")
            .map(|idx| attribute_ranges(tree, train, idx))
            .transpose()?,
        None => None,
    };
    let yearly = yearly_ranges
        .as_ref()
        .map(|r| ("yearly_consumption", r));

    let mut out = String::from("digraph pct {\n  node [shape=box];\n");
    for id in 0..display.nodes.len() {
        let label = node_label(display, id, &tree.schema, yearly, &pct_of_display);
        out.push_str(&format!("  n{id} [label=\"{label}\"];\n"));
    }
    for (id, node) in display.nodes.iter().enumerate() {
        if let DisplayNode::NAry {
            intervals,
            children,
            ..
        } = node
        {
            for (iv, child) in intervals.iter().zip(children) {
                out.push_str(&format!(
                    "  n{id} -> n{child} [label=\"{}\"];\n",
                    iv.label()
                ));
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Render the compressed tree as a plain-text outline.
pub fn render_text(tree: &Pct, display: &DisplayTree) -> String {
    fn walk(
        display: &DisplayTree,
        schema: &AttributeSchema,
        id: usize,
        indent: usize,
        prefix: &str,
        out: &mut String,
    ) {
        let pad = "  ".repeat(indent);
        match &display.nodes[id] {
            DisplayNode::Leaf {
                pct_leaf,
                member_count,
            } => {
                out.push_str(&format!("{pad}{prefix}leaf {pct_leaf} (n={member_count})\n"));
            }
            DisplayNode::NAry {
                attribute_index,
                intervals,
                children,
                member_count,
            } => {
                out.push_str(&format!(
                    "{pad}{prefix}split on {} (n={member_count})\n",
                    schema.name(*attribute_index)
                ));
                for (iv, child) in intervals.iter().zip(children) {
                    walk(
                        display,
                        schema,
                        *child,
                        indent + 1,
                        &format!("{}: ", iv.label()),
                        out,
                    );
                }
            }
        }
    }
    let mut out = String::new();
    walk(display, &tree.schema, display.root(), 0, "", &mut out);
    out
}
