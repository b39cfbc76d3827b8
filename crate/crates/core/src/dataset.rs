//! One project version as data: per-file metric vectors with defect labels,
//! raw dependency records and ownership records.
//!
//! A [`VersionDataset`] is validated on construction so every downstream
//! consumer (graph builders, sampling, protocols) can assume referential
//! integrity: edge and ownership file ids always resolve to a record.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a metric column measures. Used for manifest bookkeeping only; the
/// model consumes all columns uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricCategory {
    Code,
    Process,
    Ownership,
}

/// Ordered metric column names with per-column categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricManifest {
    pub names: Vec<String>,
    pub categories: Vec<MetricCategory>,
}

impl MetricManifest {
    pub fn new(names: Vec<String>, categories: Vec<MetricCategory>) -> Result<Self> {
        if names.len() != categories.len() {
            return Err(Error::Validation(format!(
                "manifest has {} names but {} categories",
                names.len(),
                categories.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate metric column `{name}` in manifest"
                )));
            }
        }
        Ok(Self { names, categories })
    }

    /// Convenience constructor for tests and synthetic data: `m0..m{n-1}`,
    /// all tagged as code metrics.
    pub fn numbered(n: usize) -> Self {
        Self {
            names: (0..n).map(|i| format!("m{i}")).collect(),
            categories: vec![MetricCategory::Code; n],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// One file of the version: its metric vector and defect label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRecord {
    /// Unique path of the file within the version.
    pub file_id: String,
    /// One value per manifest column, in manifest order.
    pub metrics: Vec<f64>,
    /// 1 = defective, 0 = clean.
    pub label: u8,
}

/// The kind of code dependency a raw edge represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependencyKind {
    Data,
    Call,
}

impl DependencyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "data" => Ok(Self::Data),
            "call" => Ok(Self::Call),
            other => Err(Error::Validation(format!(
                "unknown dependency kind `{other}` (expected `data` or `call`)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Data => "data",
            Self::Call => "call",
        }
    }
}

/// One raw dependency occurrence count between two files, as exported by the
/// static-analysis tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDependencyEdge {
    pub src: String,
    pub dst: String,
    pub kind: DependencyKind,
    /// Number of dependency occurrences; at least 1.
    pub count: u64,
}

impl RawDependencyEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, kind: DependencyKind, count: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Validation(
                "dependency count must be at least 1".into(),
            ));
        }
        Ok(Self {
            src: src.into(),
            dst: dst.into(),
            kind,
            count,
        })
    }
}

/// A (file, developer) contribution pair mined from commit reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OwnershipRecord {
    pub file_id: String,
    pub developer_id: String,
}

/// All data for one project version. Construction validates referential
/// integrity; the value is immutable afterwards and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionDataset {
    pub project: String,
    pub version: String,
    pub manifest: MetricManifest,
    pub records: Vec<ModuleRecord>,
    pub dep_edges: Vec<RawDependencyEdge>,
    pub ownership: Vec<OwnershipRecord>,
}

impl VersionDataset {
    pub fn new(
        project: impl Into<String>,
        version: impl Into<String>,
        manifest: MetricManifest,
        records: Vec<ModuleRecord>,
        dep_edges: Vec<RawDependencyEdge>,
        ownership: Vec<OwnershipRecord>,
    ) -> Result<Self> {
        let dataset = Self {
            project: project.into(),
            version: version.into(),
            manifest,
            records,
            dep_edges,
            ownership,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for record in &self.records {
            if record.file_id.is_empty() {
                return Err(Error::Validation("empty file id in records".into()));
            }
            if !ids.insert(record.file_id.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate file id `{}`",
                    record.file_id
                )));
            }
            if record.metrics.len() != self.manifest.len() {
                return Err(Error::Validation(format!(
                    "file `{}` has {} metrics, manifest defines {}",
                    record.file_id,
                    record.metrics.len(),
                    self.manifest.len()
                )));
            }
            if record.label > 1 {
                return Err(Error::Validation(format!(
                    "file `{}` has label {}, expected 0 or 1",
                    record.file_id, record.label
                )));
            }
        }
        for edge in &self.dep_edges {
            if edge.count == 0 {
                return Err(Error::Validation(format!(
                    "dependency {} -> {} has count 0",
                    edge.src, edge.dst
                )));
            }
            for endpoint in [&edge.src, &edge.dst] {
                if !ids.contains(endpoint.as_str()) {
                    return Err(Error::Validation(format!(
                        "dependency endpoint `{endpoint}` has no metric record"
                    )));
                }
            }
        }
        for own in &self.ownership {
            if own.developer_id.is_empty() {
                return Err(Error::Validation(format!(
                    "empty developer id for file `{}`",
                    own.file_id
                )));
            }
            if !ids.contains(own.file_id.as_str()) {
                return Err(Error::Validation(format!(
                    "ownership file `{}` has no metric record",
                    own.file_id
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Fraction of records labeled defective.
    pub fn defect_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let defective = self.records.iter().filter(|r| r.label == 1).count();
        defective as f64 / self.records.len() as f64
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Index of every file id, in record order.
    pub fn id_index(&self) -> BTreeMap<&str, usize> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.file_id.as_str(), i))
            .collect()
    }
}

/// Min-max scale every metric column into `[0, 1]` within the version.
/// Constant columns carry no information and become all zeros. Labels, ids
/// and raw dependency/ownership records are untouched.
pub fn normalize_metrics(dataset: &VersionDataset) -> Result<VersionDataset> {
    if dataset.records.is_empty() {
        return Err(Error::Validation(
            "cannot normalize an empty dataset".into(),
        ));
    }
    let width = dataset.manifest.len();
    let mut mins = vec![f64::INFINITY; width];
    let mut maxs = vec![f64::NEG_INFINITY; width];
    for record in &dataset.records {
        for (j, &value) in record.metrics.iter().enumerate() {
            mins[j] = crate::math::fmin(mins[j], value);
            maxs[j] = crate::math::fmax(maxs[j], value);
        }
    }
    let mut out = dataset.clone();
    for record in &mut out.records {
        for (j, value) in record.metrics.iter_mut().enumerate() {
            let span = maxs[j] - mins[j];
            *value = if span > 0.0 { (*value - mins[j]) / span } else { 0.0 };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, metrics: Vec<f64>, label: u8) -> ModuleRecord {
        ModuleRecord {
            file_id: id.into(),
            metrics,
            label,
        }
    }

    fn three_row_dataset() -> VersionDataset {
        VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![
                record("a", vec![2.0], 1),
                record("b", vec![4.0], 0),
                record("c", vec![6.0], 1),
            ],
            vec![],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn defect_rate_counts_labels() {
        // labels 1,0,1 -> rate 2/3
        let ds = three_row_dataset();
        assert!((ds.defect_rate() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_file_id_rejected() {
        let err = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![record("a", vec![1.0], 0), record("a", vec![2.0], 0)],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn unresolved_edge_endpoint_rejected() {
        let err = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![record("a", vec![1.0], 0)],
            vec![RawDependencyEdge::new("a", "ghost", DependencyKind::Call, 1).unwrap()],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn bad_label_rejected() {
        let err = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![record("a", vec![1.0], 2)],
            vec![],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn normalize_scales_column() {
        // [2,4,6] -> [0, 0.5, 1]
        let ds = normalize_metrics(&three_row_dataset()).unwrap();
        let values: Vec<f64> = ds.records.iter().map(|r| r.metrics[0]).collect();
        assert_eq!(values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_column_is_zero() {
        let ds = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![
                record("a", vec![5.0], 0),
                record("b", vec![5.0], 0),
                record("c", vec![5.0], 1),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let out = normalize_metrics(&ds).unwrap();
        assert!(out.records.iter().all(|r| r.metrics[0] == 0.0));
    }

    #[test]
    fn normalize_unit_range_is_identity() {
        let ds = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(1),
            vec![
                record("a", vec![0.0], 0),
                record("b", vec![1.0], 0),
                record("c", vec![0.25], 1),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let out = normalize_metrics(&ds).unwrap();
        let values: Vec<f64> = out.records.iter().map(|r| r.metrics[0]).collect();
        assert_eq!(values, vec![0.0, 1.0, 0.25]);
    }

    #[test]
    fn normalize_preserves_argmin_argmax() {
        let ds = VersionDataset::new(
            "p",
            "1.0",
            MetricManifest::numbered(2),
            vec![
                record("a", vec![3.0, -1.0], 0),
                record("b", vec![9.0, 4.0], 0),
                record("c", vec![1.0, 2.0], 1),
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let out = normalize_metrics(&ds).unwrap();
        for j in 0..2 {
            let argmax_before = (0..3)
                .max_by(|&x, &y| ds.records[x].metrics[j].total_cmp(&ds.records[y].metrics[j]))
                .unwrap();
            let argmax_after = (0..3)
                .max_by(|&x, &y| out.records[x].metrics[j].total_cmp(&out.records[y].metrics[j]))
                .unwrap();
            assert_eq!(argmax_before, argmax_after);
            assert!(out
                .records
                .iter()
                .all(|r| (0.0..=1.0).contains(&r.metrics[j])));
        }
    }

    #[test]
    fn kind_parse_rejects_unknown() {
        let err = DependencyKind::parse("ctrl").unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("ctrl"));
    }
}
