//! Diagnostic computations: how much of each node's outgoing edge weight
//! points at same-label successors (graph informativeness), and how far
//! apart defective and clean feature rows sit (representation separability).

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeFeatureMatrix};
use crate::math;

/// Per-node same-label weight shares and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborShareReport {
    /// Share of node v's outgoing weight that targets same-label successors;
    /// 0 for nodes without outgoing edges.
    pub per_node: Vec<f64>,
    /// Mean of `per_node` over all nodes.
    pub p_total: f64,
}

/// For each node, the ratio of outgoing weight to same-label successors over
/// total outgoing weight (0 when the node has no outgoing edges), averaged
/// into `p_total`. Only outgoing edges contribute.
pub fn same_label_weight_share(
    graph: &DependencyGraph,
    labels: &[u8],
) -> Result<NeighborShareReport> {
    let n = graph.node_count();
    if labels.len() != n {
        return Err(Error::Validation(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let mut per_node = Vec::with_capacity(n);
    for v in 0..n as u32 {
        let mut total = 0.0;
        let mut same = 0.0;
        for &u in graph.out_neighbors(v) {
            let w = graph.weight(v, u).expect("listed edge");
            total += w;
            if labels[u as usize] == labels[v as usize] {
                same += w;
            }
        }
        per_node.push(if total > 0.0 { same / total } else { 0.0 });
    }
    let p_total = per_node.iter().sum::<f64>() / n as f64;
    Ok(NeighborShareReport { per_node, p_total })
}

/// Separation between the two label classes in feature space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Mean Euclidean distance between (normalized) defective and clean rows.
    pub distance: f64,
    pub defective: usize,
    pub clean: usize,
}

fn normalize_row(row: &[f64]) -> Vec<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in row {
        lo = math::fmin(lo, v);
        hi = math::fmax(hi, v);
    }
    let span = hi - lo;
    row.iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

/// Mean pairwise Euclidean distance between defective and clean feature
/// rows. Each row is min-max scaled to `[0, 1]` first (constant rows become
/// zeros) unless `already_normalized` is set.
pub fn interclass_distance(
    features: &NodeFeatureMatrix,
    labels: &[u8],
    already_normalized: bool,
) -> Result<SeparabilityReport> {
    let n = features.n_rows();
    if labels.len() != n {
        return Err(Error::Validation(format!(
            "{} labels for {n} feature rows",
            labels.len()
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            if already_normalized {
                features.row(i).to_vec()
            } else {
                normalize_row(features.row(i))
            }
        })
        .collect();
    let defective: Vec<&Vec<f64>> = rows
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1)
        .map(|(r, _)| r)
        .collect();
    let clean: Vec<&Vec<f64>> = rows
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 0)
        .map(|(r, _)| r)
        .collect();
    if defective.is_empty() || clean.is_empty() {
        return Err(Error::Analysis(
            "inter-class distance needs both classes present".into(),
        ));
    }
    let mut sum = 0.0;
    for d in &defective {
        for nd in &clean {
            let sq: f64 = d
                .iter()
                .zip(nd.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sum += math::sqrt(sq);
        }
    }
    Ok(SeparabilityReport {
        distance: sum / (defective.len() * clean.len()) as f64,
        defective: defective.len(),
        clean: clean.len(),
    })
}
