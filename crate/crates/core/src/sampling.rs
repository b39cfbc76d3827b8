//! Graph-aware SMOTE: synthesize minority-class training nodes by feature
//! interpolation and copy the source node's edges so the new nodes take part
//! in message passing.
//!
//! The minority class is whichever label has fewer training nodes, not
//! assumed to be the defective one. Each synthetic node interpolates between
//! a uniformly drawn source and the source's nearest same-class training
//! node, with one delta per node applied to all dimensions. Validation and
//! test partitions are never touched.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DependencyGraph, NodeFeatureMatrix};

/// Target number of synthetic nodes as a multiple of the original minority
/// training count, or `Auto` to equalize the two training class counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingRatio {
    Fixed(f64),
    Auto,
}

impl SamplingRatio {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        let value: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("invalid sampling ratio `{s}`")))?;
        if !(value > 0.0) {
            return Err(Error::Config(format!(
                "sampling ratio must be positive, got {value}"
            )));
        }
        Ok(Self::Fixed(value))
    }
}

impl core::fmt::Display for SamplingRatio {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Fixed(r) => write!(f, "{r}"),
            Self::Auto => f.write_str("auto"),
        }
    }
}

impl Serialize for SamplingRatio {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> core::result::Result<S::Ok, S::Error> {
        match self {
            Self::Fixed(r) => serializer.serialize_f64(*r),
            Self::Auto => serializer.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for SamplingRatio {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> core::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(r) if r > 0.0 => Ok(Self::Fixed(r)),
            Raw::Number(r) => Err(serde::de::Error::custom(format!(
                "sampling ratio must be positive, got {r}"
            ))),
            Raw::Text(s) => Self::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Oversampling settings; just the ratio for now.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub ratio: SamplingRatio,
}

/// Disjoint node partitions for transductive training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMasks {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.train.len() != n || self.val.len() != n || self.test.len() != n {
            return Err(Error::Validation(format!(
                "mask lengths {}/{}/{} do not cover {n} nodes",
                self.train.len(),
                self.val.len(),
                self.test.len()
            )));
        }
        for i in 0..n {
            let claims = self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8;
            if claims > 1 {
                return Err(Error::Validation(format!(
                    "node {i} belongs to more than one partition"
                )));
            }
        }
        Ok(())
    }

    pub fn indices(mask: &[bool]) -> Vec<usize> {
        mask.iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|&&m| m).count()
    }
}

/// Provenance of one synthetic node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub node: u32,
    pub source: u32,
    pub neighbor: u32,
    pub delta: f64,
}

/// The training graph after oversampling: original nodes first, synthetic
/// nodes appended, all synthetic nodes train-masked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedDataset {
    pub graph: DependencyGraph,
    pub features: NodeFeatureMatrix,
    pub labels: Vec<u8>,
    pub masks: SplitMasks,
    pub synthetic_origin: Vec<SyntheticOrigin>,
}

impl AugmentedDataset {
    /// Wrap unaugmented inputs (used when oversampling is disabled or the
    /// requested ratio yields zero synthetic nodes).
    pub fn passthrough(
        graph: &DependencyGraph,
        features: &NodeFeatureMatrix,
        labels: &[u8],
        masks: &SplitMasks,
    ) -> Self {
        Self {
            graph: graph.clone(),
            features: features.clone(),
            labels: labels.to_vec(),
            masks: masks.clone(),
            synthetic_origin: Vec::new(),
        }
    }
}

/// The training minority node most similar to `v` in Euclidean distance,
/// excluding `v` itself. Ties break to the smallest node index.
pub fn nearest_same_class(
    v: usize,
    candidates: &[usize],
    features: &NodeFeatureMatrix,
) -> Result<usize> {
    let target = features.row(v);
    let mut best: Option<(f64, usize)> = None;
    for &c in candidates {
        if c == v {
            continue;
        }
        let row = features.row(c);
        let dist: f64 = target
            .iter()
            .zip(row)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        best = match best {
            None => Some((dist, c)),
            Some((bd, bc)) if dist < bd || (dist == bd && c < bc) => Some((dist, c)),
            other => other,
        };
    }
    best.map(|(_, c)| c).ok_or_else(|| {
        Error::Sampling(format!(
            "node {v} has no same-class training neighbor to interpolate with"
        ))
    })
}

/// `(1 - delta) * v + delta * u`, component-wise.
pub fn synthesize_node(v_features: &[f64], u_features: &[f64], delta: f64) -> Result<Vec<f64>> {
    if v_features.len() != u_features.len() {
        return Err(Error::Shape(format!(
            "interpolation between {} and {} dimensions",
            v_features.len(),
            u_features.len()
        )));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Sampling(format!("delta {delta} outside [0, 1]")));
    }
    Ok(v_features
        .iter()
        .zip(u_features)
        .map(|(v, u)| (1.0 - delta) * v + delta * u)
        .collect())
}

fn minority_label(labels: &[u8], train: &[bool]) -> (u8, usize, usize) {
    let mut counts = [0usize; 2];
    for (i, &label) in labels.iter().enumerate() {
        if train[i] {
            counts[label as usize] += 1;
        }
    }
    // A tie keeps the defective class as minority.
    let minority = if counts[1] <= counts[0] { 1u8 } else { 0u8 };
    (
        minority,
        counts[minority as usize],
        counts[1 - minority as usize],
    )
}

/// Oversample the training minority class. Each synthetic node gets the
/// source's label, an interpolated feature row, and copies of every incoming
/// and outgoing edge of the source with identical weights.
pub fn smote_augment(
    graph: &DependencyGraph,
    features: &NodeFeatureMatrix,
    labels: &[u8],
    masks: &SplitMasks,
    config: &SamplingConfig,
    rng: &mut impl Rng,
) -> Result<AugmentedDataset> {
    let n = graph.node_count();
    if features.n_rows() != n || labels.len() != n {
        return Err(Error::Validation(format!(
            "graph has {n} nodes but {} feature rows / {} labels",
            features.n_rows(),
            labels.len()
        )));
    }
    masks.validate(n)?;

    let (minority, minority_count, majority_count) = minority_label(labels, &masks.train);
    let n_synthetic = match config.ratio {
        SamplingRatio::Fixed(r) => crate::math::round(r * minority_count as f64) as usize,
        SamplingRatio::Auto => majority_count.saturating_sub(minority_count),
    };
    if n_synthetic == 0 {
        return Ok(AugmentedDataset::passthrough(graph, features, labels, masks));
    }
    if minority_count < 2 {
        return Err(Error::Sampling(format!(
            "minority class needs at least 2 training nodes, found {minority_count}"
        )));
    }

    let minority_nodes: Vec<usize> = (0..n)
        .filter(|&i| masks.train[i] && labels[i] == minority)
        .collect();

    let mut node_ids: Vec<String> = graph.node_ids().to_vec();
    let mut edges: BTreeMap<(u32, u32), f64> = graph.edges().clone();
    let mut out = AugmentedDataset::passthrough(graph, features, labels, masks);

    for k in 0..n_synthetic {
        let source = minority_nodes[rng.random_range(0..minority_nodes.len())];
        let neighbor = nearest_same_class(source, &minority_nodes, features)?;
        let delta = rng.random::<f64>();
        let row = synthesize_node(features.row(source), features.row(neighbor), delta)?;

        let new_index = node_ids.len() as u32;
        node_ids.push(format!("synthetic:{k}"));
        for &dst in graph.out_neighbors(source as u32) {
            let weight = graph.weight(source as u32, dst).expect("listed edge");
            edges.insert((new_index, dst), weight);
        }
        for &src in graph.in_neighbors(source as u32) {
            let weight = graph.weight(src, source as u32).expect("listed edge");
            edges.insert((src, new_index), weight);
        }

        out.features.push_row(&row);
        out.labels.push(labels[source]);
        out.masks.train.push(true);
        out.masks.val.push(false);
        out.masks.test.push(false);
        out.synthetic_origin.push(SyntheticOrigin {
            node: new_index,
            source: source as u32,
            neighbor: neighbor as u32,
            delta,
        });
    }

    out.graph = DependencyGraph::from_edges(graph.view(), node_ids, edges)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DependencyKind, ModuleRecord, RawDependencyEdge};
    use crate::graph::build_cdg;
    use crate::rng::seed_rng;
    use alloc::vec;

    fn features(rows: &[&[f64]]) -> NodeFeatureMatrix {
        let mut m = NodeFeatureMatrix::new(rows[0].len());
        for row in rows {
            m.push_row(row);
        }
        m
    }

    #[test]
    fn nearest_picks_closest_candidate() {
        let f = features(&[&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0]]);
        assert_eq!(nearest_same_class(0, &[1, 2], &f).unwrap(), 1);
    }

    #[test]
    fn nearest_breaks_distance_ties_by_index() {
        let f = features(&[&[0.0], &[0.0], &[0.0]]);
        assert_eq!(nearest_same_class(2, &[0, 1], &f).unwrap(), 0);
        assert_eq!(nearest_same_class(2, &[1, 0], &f).unwrap(), 0);
    }

    #[test]
    fn nearest_with_single_candidate_returns_it() {
        let f = features(&[&[0.0], &[5.0]]);
        assert_eq!(nearest_same_class(0, &[1], &f).unwrap(), 1);
    }

    #[test]
    fn nearest_without_candidates_is_sampling_error() {
        let f = features(&[&[0.0]]);
        assert!(matches!(
            nearest_same_class(0, &[0], &f),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn synthesize_endpoints_and_midpoint() {
        let v = [0.0, 0.0];
        let u = [1.0, 1.0];
        assert_eq!(synthesize_node(&v, &u, 0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(synthesize_node(&v, &u, 1.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(synthesize_node(&v, &u, 0.5).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn synthesize_rejects_dimension_mismatch() {
        assert!(matches!(
            synthesize_node(&[0.0], &[0.0, 1.0], 0.5),
            Err(Error::Shape(_))
        ));
    }

    fn toy_setup(
        labels: Vec<u8>,
        train: Vec<bool>,
    ) -> (DependencyGraph, NodeFeatureMatrix, Vec<u8>, SplitMasks) {
        let n = labels.len();
        let records: Vec<ModuleRecord> = (0..n)
            .map(|i| ModuleRecord {
                file_id: format!("f{i}"),
                metrics: vec![i as f64, (i * i) as f64 * 0.1],
                label: labels[i],
            })
            .collect();
        let deps = vec![
            RawDependencyEdge {
                src: "f0".into(),
                dst: "f1".into(),
                kind: DependencyKind::Call,
                count: 3,
            },
            RawDependencyEdge {
                src: "f1".into(),
                dst: "f2".into(),
                kind: DependencyKind::Data,
                count: 7,
            },
        ];
        let graph = build_cdg(&records, &deps).unwrap();
        let features = {
            let mut m = NodeFeatureMatrix::new(2);
            for r in &records {
                m.push_row(&r.metrics);
            }
            m
        };
        let masks = SplitMasks {
            train,
            val: vec![false; n],
            test: vec![false; n],
        };
        (graph, features, labels, masks)
    }

    #[test]
    fn auto_ratio_equalizes_train_counts() {
        // 2 minority / 4 majority training nodes -> 2 synthetic nodes.
        let labels = vec![1, 1, 0, 0, 0, 0];
        let train = vec![true; 6];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Auto,
            },
            &mut seed_rng(3),
        )
        .unwrap();
        assert_eq!(out.graph.node_count(), 8);
        let count = |want: u8| {
            out.labels
                .iter()
                .zip(&out.masks.train)
                .filter(|&(l, &t)| t && *l == want)
                .count()
        };
        assert_eq!(count(1), count(0));
    }

    #[test]
    fn fixed_ratio_counts_synthetic_nodes() {
        let labels = vec![1, 1, 0, 0, 0, 0];
        let train = vec![true; 6];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Fixed(2.0),
            },
            &mut seed_rng(3),
        )
        .unwrap();
        assert_eq!(out.synthetic_origin.len(), 4);
    }

    #[test]
    fn synthetic_nodes_copy_source_edges_exactly() {
        // f1 has in-edge (f0 -> f1, 3) and out-edge (f1 -> f2, 7).
        let labels = vec![0, 1, 1, 0, 0];
        let train = vec![true; 5];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Fixed(3.0),
            },
            &mut seed_rng(9),
        )
        .unwrap();
        assert!(!out.synthetic_origin.is_empty());
        for origin in &out.synthetic_origin {
            let node = origin.node;
            let source = origin.source;
            let outgoing = |g: &DependencyGraph, v: u32| -> Vec<(u32, f64)> {
                g.out_neighbors(v)
                    .iter()
                    .map(|&d| (d, g.weight(v, d).unwrap()))
                    .collect()
            };
            let incoming = |g: &DependencyGraph, v: u32| -> Vec<(u32, f64)> {
                g.in_neighbors(v)
                    .iter()
                    .map(|&s| (s, g.weight(s, v).unwrap()))
                    .collect()
            };
            assert_eq!(outgoing(&out.graph, node), outgoing(&graph, source));
            // Incoming edges of the synthetic node come only from original
            // nodes, so filtering is unnecessary: synthetic nodes never gain
            // edges from later synthetic nodes (sources are original).
            assert_eq!(incoming(&out.graph, node), incoming(&graph, source));
        }
    }

    #[test]
    fn interpolation_identity_holds_for_every_synthetic_row() {
        let labels = vec![1, 1, 1, 0, 0, 0, 0];
        let train = vec![true; 7];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Fixed(2.0),
            },
            &mut seed_rng(5),
        )
        .unwrap();
        for origin in &out.synthetic_origin {
            let row = out.features.row(origin.node as usize);
            let src = features.row(origin.source as usize);
            let nbr = features.row(origin.neighbor as usize);
            for ((r, s), n) in row.iter().zip(src).zip(nbr) {
                let expect = (1.0 - origin.delta) * s + origin.delta * n;
                assert!((r - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn val_and_test_partitions_are_untouched() {
        let labels = vec![1, 1, 0, 0, 0, 0];
        let train = vec![true, true, true, true, false, false];
        let (graph, features, labels, mut masks) = toy_setup(labels, train);
        masks.val[4] = true;
        masks.test[5] = true;
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Auto,
            },
            &mut seed_rng(1),
        )
        .unwrap();
        let n = labels.len();
        assert_eq!(&out.masks.val[..n], &masks.val[..]);
        assert_eq!(&out.masks.test[..n], &masks.test[..]);
        assert!(out.masks.val[n..].iter().all(|&v| !v));
        assert!(out.masks.test[n..].iter().all(|&v| !v));
        assert_eq!(&out.labels[..n], &labels[..]);
        assert_eq!(out.features.row(4), features.row(4));
        assert_eq!(out.features.row(5), features.row(5));
        // Edges among original nodes are unchanged.
        for (&(s, d), &w) in graph.edges() {
            assert_eq!(out.graph.weight(s, d), Some(w));
        }
    }

    #[test]
    fn zero_synthetic_request_returns_input_unchanged() {
        let labels = vec![1, 1, 0, 0];
        let train = vec![true; 4];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let out = smote_augment(
            &graph,
            &features,
            &labels,
            &masks,
            &SamplingConfig {
                ratio: SamplingRatio::Auto,
            },
            &mut seed_rng(1),
        )
        .unwrap();
        assert_eq!(out.graph.node_count(), 4);
        assert!(out.synthetic_origin.is_empty());
    }

    #[test]
    fn single_minority_training_node_is_sampling_error() {
        let labels = vec![1, 0, 0, 0];
        let train = vec![true; 4];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        assert!(matches!(
            smote_augment(
                &graph,
                &features,
                &labels,
                &masks,
                &SamplingConfig {
                    ratio: SamplingRatio::Fixed(1.0),
                },
                &mut seed_rng(1),
            ),
            Err(Error::Sampling(_))
        ));
    }

    #[test]
    fn fixed_seed_reproduces_augmentation() {
        let labels = vec![1, 1, 1, 0, 0, 0, 0, 0];
        let train = vec![true; 8];
        let (graph, features, labels, masks) = toy_setup(labels, train);
        let config = SamplingConfig {
            ratio: SamplingRatio::Auto,
        };
        let a =
            smote_augment(&graph, &features, &labels, &masks, &config, &mut seed_rng(7)).unwrap();
        let b =
            smote_augment(&graph, &features, &labels, &masks, &config, &mut seed_rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_ratio_round_trips_through_display_and_parse() {
        for (text, ratio) in [
            ("auto", SamplingRatio::Auto),
            ("0.5", SamplingRatio::Fixed(0.5)),
            ("3", SamplingRatio::Fixed(3.0)),
        ] {
            let parsed = SamplingRatio::parse(text).unwrap();
            assert_eq!(parsed, ratio);
            assert_eq!(
                SamplingRatio::parse(&alloc::format!("{parsed}")).unwrap(),
                ratio
            );
        }
        assert!(SamplingRatio::parse("-1").is_err());
        assert!(SamplingRatio::parse("many").is_err());
    }
}
