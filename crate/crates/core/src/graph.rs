//! Directed weighted dependency graphs over the files of one version.
//!
//! Three views share one representation: the code dependency graph (CDG)
//! weights an edge by the summed data + call dependency counts, the developer
//! dependency graph (DDG) mutually links two files with weight equal to their
//! shared developer count, and the multi-view graph (MSDG) is the edge-wise
//! sum of the two. Edge weights are normalized per node over outgoing edges
//! so each node's out-weights sum to one.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use serde::{Deserialize, Serialize};

use crate::dataset::{ModuleRecord, OwnershipRecord, RawDependencyEdge, VersionDataset};
use crate::error::{Error, Result};

/// Which dependency view a graph was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphView {
    Cdg,
    Ddg,
    Msdg,
}

impl GraphView {
    pub const ALL: [GraphView; 3] = [GraphView::Cdg, GraphView::Ddg, GraphView::Msdg];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cdg" => Ok(Self::Cdg),
            "ddg" => Ok(Self::Ddg),
            "msdg" => Ok(Self::Msdg),
            other => Err(Error::Validation(format!(
                "unknown graph view `{other}` (expected cdg, ddg or msdg)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Cdg => "cdg",
            Self::Ddg => "ddg",
            Self::Msdg => "msdg",
        }
    }
}

impl core::fmt::Display for GraphView {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A directed weighted graph over file nodes, immutable after construction.
/// No self-loops, all weights strictly positive, and forward/backward
/// adjacency always consistent with the edge map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    view: GraphView,
    node_ids: Vec<String>,
    edges: BTreeMap<(u32, u32), f64>,
    #[serde(skip)]
    fwd: Vec<Vec<u32>>,
    #[serde(skip)]
    bwd: Vec<Vec<u32>>,
}

impl DependencyGraph {
    /// Build a graph from an edge map, validating invariants and deriving
    /// the adjacency indexes.
    pub fn from_edges(
        view: GraphView,
        node_ids: Vec<String>,
        edges: BTreeMap<(u32, u32), f64>,
    ) -> Result<Self> {
        let n = node_ids.len() as u32;
        for (&(src, dst), &weight) in &edges {
            if src == dst {
                return Err(Error::Validation(format!(
                    "self loop on node index {src}"
                )));
            }
            if src >= n || dst >= n {
                return Err(Error::Validation(format!(
                    "edge ({src}, {dst}) outside node range 0..{n}"
                )));
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::Validation(format!(
                    "edge ({src}, {dst}) has non-positive weight {weight}"
                )));
            }
        }
        let mut graph = Self {
            view,
            node_ids,
            edges,
            fwd: Vec::new(),
            bwd: Vec::new(),
        };
        graph.rebuild_adjacency();
        Ok(graph)
    }

    fn rebuild_adjacency(&mut self) {
        let n = self.node_ids.len();
        self.fwd = vec![Vec::new(); n];
        self.bwd = vec![Vec::new(); n];
        // BTreeMap iteration is sorted, so the lists come out sorted too.
        for &(src, dst) in self.edges.keys() {
            self.fwd[src as usize].push(dst);
            self.bwd[dst as usize].push(src);
        }
        for list in &mut self.bwd {
            list.sort_unstable();
        }
    }

    /// Adjacency indexes are skipped by serde; rebuild them after
    /// deserializing.
    pub fn restore_after_deserialize(&mut self) -> Result<()> {
        let clone = Self::from_edges(
            self.view,
            core::mem::take(&mut self.node_ids),
            core::mem::take(&mut self.edges),
        )?;
        *self = clone;
        Ok(())
    }

    pub fn view(&self) -> GraphView {
        self.view
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.edges
    }

    pub fn weight(&self, src: u32, dst: u32) -> Option<f64> {
        self.edges.get(&(src, dst)).copied()
    }

    /// Targets of outgoing edges of `v`, ascending.
    pub fn out_neighbors(&self, v: u32) -> &[u32] {
        &self.fwd[v as usize]
    }

    /// Sources of incoming edges of `v`, ascending.
    pub fn in_neighbors(&self, v: u32) -> &[u32] {
        &self.bwd[v as usize]
    }

    pub fn out_weight_sum(&self, v: u32) -> f64 {
        self.fwd[v as usize]
            .iter()
            .map(|&u| self.edges[&(v, u)])
            .sum()
    }

    pub fn index_of(&self, file_id: &str) -> Option<u32> {
        self.node_ids
            .iter()
            .position(|id| id == file_id)
            .map(|i| i as u32)
    }
}

fn id_index(records: &[ModuleRecord]) -> BTreeMap<&str, u32> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| (r.file_id.as_str(), i as u32))
        .collect()
}

fn node_ids(records: &[ModuleRecord]) -> Vec<String> {
    records.iter().map(|r| r.file_id.clone()).collect()
}

/// Code dependency graph: the weight of `A -> B` is the total number of data
/// and call dependency occurrences of A on B. Self-dependencies in the raw
/// export are dropped.
pub fn build_cdg(
    records: &[ModuleRecord],
    dep_edges: &[RawDependencyEdge],
) -> Result<DependencyGraph> {
    let index = id_index(records);
    let mut edges: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for edge in dep_edges {
        let src = *index.get(edge.src.as_str()).ok_or_else(|| {
            Error::Validation(format!("dependency source `{}` has no record", edge.src))
        })?;
        let dst = *index.get(edge.dst.as_str()).ok_or_else(|| {
            Error::Validation(format!("dependency target `{}` has no record", edge.dst))
        })?;
        if src == dst {
            continue;
        }
        *edges.entry((src, dst)).or_insert(0.0) += edge.count as f64;
    }
    DependencyGraph::from_edges(GraphView::Cdg, node_ids(records), edges)
}

/// Developer dependency graph: every unordered pair of files sharing at
/// least one developer is linked in both directions, weighted by the number
/// of shared developers.
pub fn build_ddg(
    records: &[ModuleRecord],
    ownership: &[OwnershipRecord],
) -> Result<DependencyGraph> {
    let index = id_index(records);
    // (developer -> files) after deduplicating (file, developer) pairs.
    let mut files_of_dev: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
    for own in ownership {
        let file = *index.get(own.file_id.as_str()).ok_or_else(|| {
            Error::Validation(format!("ownership file `{}` has no record", own.file_id))
        })?;
        files_of_dev
            .entry(own.developer_id.as_str())
            .or_default()
            .insert(file);
    }
    let mut shared: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for files in files_of_dev.values() {
        let files: Vec<u32> = files.iter().copied().collect();
        for (i, &a) in files.iter().enumerate() {
            for &b in &files[i + 1..] {
                *shared.entry((a, b)).or_insert(0.0) += 1.0;
            }
        }
    }
    let mut edges = BTreeMap::new();
    for ((a, b), weight) in shared {
        edges.insert((a, b), weight);
        edges.insert((b, a), weight);
    }
    DependencyGraph::from_edges(GraphView::Ddg, node_ids(records), edges)
}

/// Multi-view graph: edge-wise weight sum of a CDG and a DDG over the same
/// node sequence, absent edges counting as zero.
pub fn build_msdg(cdg: &DependencyGraph, ddg: &DependencyGraph) -> Result<DependencyGraph> {
    if cdg.node_ids != ddg.node_ids {
        return Err(Error::Validation(
            "CDG and DDG node sequences differ; build both from the same records".into(),
        ));
    }
    let mut edges = cdg.edges.clone();
    for (&key, &weight) in &ddg.edges {
        *edges.entry(key).or_insert(0.0) += weight;
    }
    DependencyGraph::from_edges(GraphView::Msdg, cdg.node_ids.clone(), edges)
}

/// Divide each node's outgoing weights by their sum, so out-weights sum to
/// one. Nodes without outgoing edges are unchanged. Ratios between a node's
/// outgoing weights are preserved.
pub fn normalize_edge_weights(graph: &DependencyGraph) -> DependencyGraph {
    let mut sums = vec![0.0f64; graph.node_count()];
    for (&(src, _), &weight) in &graph.edges {
        sums[src as usize] += weight;
    }
    let edges = graph
        .edges
        .iter()
        .map(|(&(src, dst), &weight)| ((src, dst), weight / sums[src as usize]))
        .collect();
    DependencyGraph::from_edges(graph.view, graph.node_ids.clone(), edges)
        .expect("normalization preserves graph invariants")
}

/// Options for assembling a view out of the raw records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphBuildOptions {
    /// Sum per-view normalized weights instead of raw weights when building
    /// the MSDG (sensitivity mode; the default sums raw weights).
    pub msdg_sum_normalized: bool,
}

/// Build the requested view from a dataset and normalize its edge weights.
pub fn build_view(
    dataset: &VersionDataset,
    view: GraphView,
    options: &GraphBuildOptions,
) -> Result<DependencyGraph> {
    let graph = match view {
        GraphView::Cdg => build_cdg(&dataset.records, &dataset.dep_edges)?,
        GraphView::Ddg => build_ddg(&dataset.records, &dataset.ownership)?,
        GraphView::Msdg => {
            let cdg = build_cdg(&dataset.records, &dataset.dep_edges)?;
            let ddg = build_ddg(&dataset.records, &dataset.ownership)?;
            if options.msdg_sum_normalized {
                build_msdg(&normalize_edge_weights(&cdg), &normalize_edge_weights(&ddg))?
            } else {
                build_msdg(&cdg, &ddg)?
            }
        }
    };
    Ok(normalize_edge_weights(&graph))
}

/// Row-per-node feature matrix, aligned with a graph's node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatureMatrix {
    width: usize,
    data: Vec<f64>,
}

impl NodeFeatureMatrix {
    pub fn new(width: usize) -> Self {
        Self {
            width,
            data: Vec::new(),
        }
    }

    /// Metric vectors of the records, in record order (which is also the
    /// node order of the graphs built from those records).
    pub fn from_dataset(dataset: &VersionDataset) -> Self {
        let mut matrix = Self::new(dataset.manifest.len());
        for record in &dataset.records {
            matrix.push_row(&record.metrics);
        }
        matrix
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        self.data.extend_from_slice(row);
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.data.len() / self.width
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DependencyKind, MetricManifest, VersionDataset};

    fn record(id: &str, label: u8) -> ModuleRecord {
        ModuleRecord {
            file_id: id.into(),
            metrics: alloc::vec![0.0],
            label,
        }
    }

    fn dep(src: &str, dst: &str, kind: DependencyKind, count: u64) -> RawDependencyEdge {
        RawDependencyEdge {
            src: src.into(),
            dst: dst.into(),
            kind,
            count,
        }
    }

    fn own(file: &str, dev: &str) -> OwnershipRecord {
        OwnershipRecord {
            file_id: file.into(),
            developer_id: dev.into(),
        }
    }

    /// Five modules wired like the worked example: C and E depend on A 3 and
    /// 7 times, E on B 8 times, C and D on E 11 and 9 times; A and C share 5
    /// developers, B and D share 3.
    pub(crate) fn five_module_fixture() -> VersionDataset {
        let records = alloc::vec![
            record("A", 1),
            record("B", 0),
            record("C", 1),
            record("D", 0),
            record("E", 1),
        ];
        let deps = alloc::vec![
            // C -> A split across kinds to exercise the data + call sum.
            dep("C", "A", DependencyKind::Data, 1),
            dep("C", "A", DependencyKind::Call, 2),
            dep("E", "A", DependencyKind::Call, 7),
            dep("E", "B", DependencyKind::Data, 8),
            dep("C", "E", DependencyKind::Call, 11),
            dep("D", "E", DependencyKind::Data, 9),
        ];
        let mut ownership = Vec::new();
        for d in 0..5 {
            ownership.push(own("A", &alloc::format!("d{d}")));
            ownership.push(own("C", &alloc::format!("d{d}")));
        }
        for d in 0..3 {
            ownership.push(own("B", &alloc::format!("e{d}")));
            ownership.push(own("D", &alloc::format!("e{d}")));
        }
        VersionDataset::new(
            "fixture",
            "1.0",
            MetricManifest::numbered(1),
            records,
            deps,
            ownership,
        )
        .unwrap()
    }

    fn w(graph: &DependencyGraph, src: &str, dst: &str) -> Option<f64> {
        let s = graph.index_of(src)?;
        let d = graph.index_of(dst)?;
        graph.weight(s, d)
    }

    #[test]
    fn cdg_reproduces_fixture_weights() {
        let ds = five_module_fixture();
        let cdg = build_cdg(&ds.records, &ds.dep_edges).unwrap();
        assert_eq!(w(&cdg, "C", "A"), Some(3.0));
        assert_eq!(w(&cdg, "E", "A"), Some(7.0));
        assert_eq!(w(&cdg, "E", "B"), Some(8.0));
        assert_eq!(w(&cdg, "C", "E"), Some(11.0));
        assert_eq!(w(&cdg, "D", "E"), Some(9.0));
        assert_eq!(cdg.edge_count(), 5);
        // Direction preserved: no reverse edges.
        assert_eq!(w(&cdg, "A", "C"), None);
    }

    #[test]
    fn ddg_reproduces_fixture_weights() {
        let ds = five_module_fixture();
        let ddg = build_ddg(&ds.records, &ds.ownership).unwrap();
        assert_eq!(w(&ddg, "A", "C"), Some(5.0));
        assert_eq!(w(&ddg, "C", "A"), Some(5.0));
        assert_eq!(w(&ddg, "B", "D"), Some(3.0));
        assert_eq!(w(&ddg, "D", "B"), Some(3.0));
        assert_eq!(ddg.edge_count(), 4);
    }

    #[test]
    fn msdg_sums_fixture_views() {
        let ds = five_module_fixture();
        let cdg = build_cdg(&ds.records, &ds.dep_edges).unwrap();
        let ddg = build_ddg(&ds.records, &ds.ownership).unwrap();
        let msdg = build_msdg(&cdg, &ddg).unwrap();
        // CDG(C,A)=3 plus DDG(C,A)=5.
        assert_eq!(w(&msdg, "C", "A"), Some(8.0));
        // Edges present in only one view keep their weight.
        assert_eq!(w(&msdg, "A", "C"), Some(5.0));
        assert_eq!(w(&msdg, "C", "E"), Some(11.0));
        assert_eq!(msdg.edge_count(), 8);
    }

    #[test]
    fn cdg_sums_kinds_for_same_pair() {
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let deps = alloc::vec![
            dep("A", "B", DependencyKind::Data, 2),
            dep("A", "B", DependencyKind::Call, 5),
        ];
        let cdg = build_cdg(&records, &deps).unwrap();
        assert_eq!(w(&cdg, "A", "B"), Some(7.0));
    }

    #[test]
    fn cdg_drops_self_dependencies() {
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let deps = alloc::vec![
            dep("A", "A", DependencyKind::Call, 4),
            dep("A", "B", DependencyKind::Call, 1),
        ];
        let cdg = build_cdg(&records, &deps).unwrap();
        assert_eq!(cdg.edge_count(), 1);
    }

    #[test]
    fn cdg_without_edges_keeps_nodes() {
        let records = alloc::vec![record("A", 0), record("B", 1)];
        let cdg = build_cdg(&records, &[]).unwrap();
        assert_eq!(cdg.node_count(), 2);
        assert_eq!(cdg.edge_count(), 0);
    }

    #[test]
    fn cdg_unresolved_endpoint_is_error() {
        let records = alloc::vec![record("A", 0)];
        let deps = alloc::vec![dep("A", "Z", DependencyKind::Call, 1)];
        assert!(matches!(
            build_cdg(&records, &deps),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn ddg_counts_shared_developers() {
        // develop(A) = {x,y,z}, develop(B) = {y,z,q} -> weight 2 both ways
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let ownership = alloc::vec![
            own("A", "x"),
            own("A", "y"),
            own("A", "z"),
            own("B", "y"),
            own("B", "z"),
            own("B", "q"),
        ];
        let ddg = build_ddg(&records, &ownership).unwrap();
        assert_eq!(w(&ddg, "A", "B"), Some(2.0));
        assert_eq!(w(&ddg, "B", "A"), Some(2.0));
    }

    #[test]
    fn ddg_deduplicates_ownership_pairs() {
        // (A,d1) listed twice still counts one developer.
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let ownership = alloc::vec![own("A", "d1"), own("A", "d1"), own("B", "d1")];
        let ddg = build_ddg(&records, &ownership).unwrap();
        assert_eq!(w(&ddg, "A", "B"), Some(1.0));
    }

    #[test]
    fn ddg_disjoint_developers_is_empty() {
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let ownership = alloc::vec![own("A", "x"), own("B", "y")];
        let ddg = build_ddg(&records, &ownership).unwrap();
        assert_eq!(ddg.edge_count(), 0);
    }

    #[test]
    fn msdg_requires_matching_nodes() {
        let a = build_cdg(&[record("A", 0)], &[]).unwrap();
        let b = build_cdg(&[record("B", 0)], &[]).unwrap();
        assert!(matches!(build_msdg(&a, &b), Err(Error::Validation(_))));
    }

    #[test]
    fn msdg_of_empty_views_is_empty() {
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let cdg = build_cdg(&records, &[]).unwrap();
        let ddg = build_ddg(&records, &[]).unwrap();
        let msdg = build_msdg(&cdg, &ddg).unwrap();
        assert_eq!(msdg.edge_count(), 0);
    }

    #[test]
    fn normalize_divides_by_out_sum() {
        // out-weights [2, 3] -> [0.4, 0.6]
        let records = alloc::vec![record("A", 0), record("B", 0), record("C", 0)];
        let deps = alloc::vec![
            dep("A", "B", DependencyKind::Call, 2),
            dep("A", "C", DependencyKind::Call, 3),
        ];
        let graph = build_cdg(&records, &deps).unwrap();
        let normalized = normalize_edge_weights(&graph);
        assert_eq!(w(&normalized, "A", "B"), Some(0.4));
        assert_eq!(w(&normalized, "A", "C"), Some(0.6));
    }

    #[test]
    fn normalize_single_edge_is_one() {
        let records = alloc::vec![record("A", 0), record("B", 0)];
        let deps = alloc::vec![dep("A", "B", DependencyKind::Call, 9)];
        let normalized = normalize_edge_weights(&build_cdg(&records, &deps).unwrap());
        assert_eq!(w(&normalized, "A", "B"), Some(1.0));
    }

    #[test]
    fn normalize_leaves_isolated_nodes_alone() {
        let records = alloc::vec![record("A", 0), record("B", 0), record("C", 0)];
        let deps = alloc::vec![dep("A", "B", DependencyKind::Call, 1)];
        let graph = build_cdg(&records, &deps).unwrap();
        let normalized = normalize_edge_weights(&graph);
        assert_eq!(normalized.out_neighbors(2), &[] as &[u32]);
        assert_eq!(normalized.edge_count(), 1);
    }

    #[test]
    fn adjacency_indexes_are_consistent() {
        let ds = five_module_fixture();
        let msdg = build_msdg(
            &build_cdg(&ds.records, &ds.dep_edges).unwrap(),
            &build_ddg(&ds.records, &ds.ownership).unwrap(),
        )
        .unwrap();
        for (&(src, dst), _) in msdg.edges() {
            assert!(msdg.out_neighbors(src).contains(&dst));
            assert!(msdg.in_neighbors(dst).contains(&src));
        }
        let listed: usize = (0..msdg.node_count() as u32)
            .map(|v| msdg.out_neighbors(v).len())
            .sum();
        assert_eq!(listed, msdg.edge_count());
    }

    #[test]
    fn feature_matrix_tracks_record_order() {
        let ds = five_module_fixture();
        let matrix = NodeFeatureMatrix::from_dataset(&ds);
        assert_eq!(matrix.n_rows(), 5);
        assert_eq!(matrix.width(), 1);
        assert_eq!(matrix.row(2), ds.records[2].metrics.as_slice());
    }
}
