//! On-disk formats: dataset directories (CSV + manifest JSON), graph
//! exports, parameter checkpoints, experiment reports, prediction dumps and
//! comparison files.
//!
//! A dataset directory holds `metrics.csv` (`file,label,<metric names...>`),
//! `deps.csv` (`src,dst,kind,count`), `ownership.csv` (`file,developer`) and
//! `manifest.json` (ordered metric names and categories, plus the project
//! and version ids). All text is UTF-8 with `.` as the decimal separator.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mvsdg_core::analysis::{NeighborShareReport, SeparabilityReport};
use mvsdg_core::dataset::{
    DependencyKind, MetricCategory, MetricManifest, ModuleRecord, OwnershipRecord,
    RawDependencyEdge, VersionDataset,
};
use mvsdg_core::eval::{ExperimentReport, StatTestResult};
use mvsdg_core::graph::{DependencyGraph, GraphView, NodeFeatureMatrix};
use mvsdg_core::model::BiGgnnParams;
use mvsdg_core::Error as CoreError;

use crate::error::{CliError, CliResult};

pub const METRICS_FILE: &str = "metrics.csv";
pub const DEPS_FILE: &str = "deps.csv";
pub const OWNERSHIP_FILE: &str = "ownership.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const FORMAT_VERSION: u32 = 1;

fn open_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

fn csv_reader(path: &Path) -> CliResult<csv::Reader<fs::File>> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

/// `manifest.json`: metric columns plus the dataset identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    #[serde(default)]
    pub project: Option<String>,
    #[serde(default)]
    pub version: Option<String>,
    pub names: Vec<String>,
    pub categories: Vec<MetricCategory>,
}

pub fn read_manifest(path: &Path) -> CliResult<(MetricManifest, Option<String>, Option<String>)> {
    let text = open_text(path)?;
    let file: ManifestFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed {}: {e}", path.display())))?;
    let manifest = MetricManifest::new(file.names, file.categories)?;
    Ok((manifest, file.project, file.version))
}

pub fn write_manifest(path: &Path, dataset: &VersionDataset) -> CliResult<()> {
    let file = ManifestFile {
        project: Some(dataset.project.clone()),
        version: Some(dataset.version.clone()),
        names: dataset.manifest.names.clone(),
        categories: dataset.manifest.categories.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

/// Parse `metrics.csv` against a manifest. The header must carry `file`,
/// `label` and then exactly the manifest's metric names.
pub fn parse_metrics(path: &Path, manifest: &MetricManifest) -> CliResult<Vec<ModuleRecord>> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut expected = vec!["file".to_string(), "label".to_string()];
    expected.extend(manifest.names.iter().cloned());
    for column in &expected {
        if !headers.iter().any(|h| h == column) {
            return Err(CoreError::Schema {
                column: column.clone(),
            }
            .into());
        }
    }
    if headers != expected {
        return Err(CliError::usage(format!(
            "{}: header columns must be exactly `file,label,<manifest metrics...>` in order",
            path.display()
        )));
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_index = i + 1;
        let file_id = row
            .get(0)
            .unwrap_or_default()
            .to_string();
        if file_id.is_empty() {
            return Err(CoreError::Parse {
                row: row_index,
                message: "empty file id".into(),
            }
            .into());
        }
        if !seen.insert(file_id.clone()) {
            return Err(CoreError::Validation(format!(
                "duplicate file id `{file_id}` at row {row_index}"
            ))
            .into());
        }
        let label_text = row.get(1).unwrap_or_default();
        let label: u8 = match label_text {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CoreError::Parse {
                    row: row_index,
                    message: format!("label `{other}` is not 0 or 1"),
                }
                .into())
            }
        };
        let mut metrics = Vec::with_capacity(manifest.len());
        for (j, name) in manifest.names.iter().enumerate() {
            let cell = row.get(2 + j).unwrap_or_default();
            let value: f64 = cell.parse().map_err(|_| CoreError::Parse {
                row: row_index,
                message: format!("column `{name}`: `{cell}` is not a number"),
            })?;
            metrics.push(value);
        }
        records.push(ModuleRecord {
            file_id,
            metrics,
            label,
        });
    }
    Ok(records)
}

/// Parse `deps.csv` (`src,dst,kind,count`; kind in {data, call}, count >= 1).
pub fn parse_dependencies(path: &Path) -> CliResult<Vec<RawDependencyEdge>> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers != ["src", "dst", "kind", "count"] {
        return Err(CliError::usage(format!(
            "{}: expected header `src,dst,kind,count`",
            path.display()
        )));
    }
    let mut edges = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_index = i + 1;
        let kind = DependencyKind::parse(row.get(2).unwrap_or_default())?;
        let count: u64 = row
            .get(3)
            .unwrap_or_default()
            .parse()
            .map_err(|_| CoreError::Parse {
                row: row_index,
                message: format!("count `{}` is not an integer", row.get(3).unwrap_or_default()),
            })?;
        if count == 0 {
            return Err(CoreError::Validation(format!(
                "dependency count 0 at row {row_index}"
            ))
            .into());
        }
        edges.push(RawDependencyEdge {
            src: row.get(0).unwrap_or_default().to_string(),
            dst: row.get(1).unwrap_or_default().to_string(),
            kind,
            count,
        });
    }
    Ok(edges)
}

/// Parse `ownership.csv` (`file,developer`), deduplicating pairs.
pub fn parse_ownership(path: &Path) -> CliResult<Vec<OwnershipRecord>> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers != ["file", "developer"] {
        return Err(CliError::usage(format!(
            "{}: expected header `file,developer`",
            path.display()
        )));
    }
    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let record = OwnershipRecord {
            file_id: row.get(0).unwrap_or_default().to_string(),
            developer_id: row.get(1).unwrap_or_default().to_string(),
        };
        if record.developer_id.is_empty() {
            return Err(
                CoreError::Validation(format!("empty developer id for `{}`", record.file_id))
                    .into(),
            );
        }
        if seen.insert((record.file_id.clone(), record.developer_id.clone())) {
            records.push(record);
        }
    }
    Ok(records)
}

/// Load a dataset directory (`metrics.csv`, `deps.csv`, `ownership.csv`,
/// `manifest.json`). Falls back to the directory name when the manifest
/// carries no project/version ids.
pub fn load_dataset(dir: &Path) -> CliResult<VersionDataset> {
    let (manifest, project, version) = read_manifest(&dir.join(MANIFEST_FILE))?;
    let records = parse_metrics(&dir.join(METRICS_FILE), &manifest)?;
    let dep_edges = parse_dependencies(&dir.join(DEPS_FILE))?;
    let ownership = parse_ownership(&dir.join(OWNERSHIP_FILE))?;
    let fallback = dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    Ok(VersionDataset::new(
        project.unwrap_or(fallback),
        version.unwrap_or_else(|| "unversioned".to_string()),
        manifest,
        records,
        dep_edges,
        ownership,
    )?)
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that round-trips exactly.
    format!("{v}")
}

pub fn write_metrics(path: &Path, dataset: &VersionDataset) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["file".to_string(), "label".to_string()];
    header.extend(dataset.manifest.names.iter().cloned());
    writer.write_record(&header)?;
    for record in &dataset.records {
        let mut row = vec![record.file_id.clone(), record.label.to_string()];
        row.extend(record.metrics.iter().map(|&v| fmt_f64(v)));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_dependencies(path: &Path, edges: &[RawDependencyEdge]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["src", "dst", "kind", "count"])?;
    for edge in edges {
        writer.write_record([
            edge.src.as_str(),
            edge.dst.as_str(),
            edge.kind.as_str(),
            &edge.count.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_ownership(path: &Path, ownership: &[OwnershipRecord]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["file", "developer"])?;
    for record in ownership {
        writer.write_record([record.file_id.as_str(), record.developer_id.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write all four dataset files into `dir` (created if needed).
pub fn write_dataset(dir: &Path, dataset: &VersionDataset) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    write_manifest(&dir.join(MANIFEST_FILE), dataset)?;
    write_metrics(&dir.join(METRICS_FILE), dataset)?;
    write_dependencies(&dir.join(DEPS_FILE), &dataset.dep_edges)?;
    write_ownership(&dir.join(OWNERSHIP_FILE), &dataset.ownership)?;
    Ok(())
}

/// Sidecar JSON of a graph export: view tag, node order, edge file name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub format_version: u32,
    pub view: GraphView,
    pub project: String,
    pub version: String,
    pub node_ids: Vec<String>,
    pub edge_file: String,
}

/// Export a graph as `<view>.edges.csv` (`src,dst,weight`) plus
/// `<view>.graph.json`. The pair round-trips bit-exactly through
/// [`import_graph`].
pub fn export_graph(
    dir: &Path,
    graph: &DependencyGraph,
    project: &str,
    version: &str,
) -> CliResult<PathBuf> {
    fs::create_dir_all(dir)?;
    let edge_file = format!("{}.edges.csv", graph.view());
    let mut writer = csv::Writer::from_path(dir.join(&edge_file))?;
    writer.write_record(["src", "dst", "weight"])?;
    for (&(src, dst), &weight) in graph.edges() {
        writer.write_record([
            graph.node_ids()[src as usize].as_str(),
            graph.node_ids()[dst as usize].as_str(),
            &fmt_f64(weight),
        ])?;
    }
    writer.flush()?;
    let sidecar = GraphSidecar {
        format_version: FORMAT_VERSION,
        view: graph.view(),
        project: project.to_string(),
        version: version.to_string(),
        node_ids: graph.node_ids().to_vec(),
        edge_file,
    };
    let sidecar_path = dir.join(format!("{}.graph.json", graph.view()));
    fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(sidecar_path)
}

/// Rebuild a graph from its sidecar JSON (the edge CSV sits next to it).
pub fn import_graph(sidecar_path: &Path) -> CliResult<(DependencyGraph, String, String)> {
    let text = open_text(sidecar_path)?;
    let sidecar: GraphSidecar = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed {}: {e}", sidecar_path.display())))?;
    let dir = sidecar_path.parent().unwrap_or_else(|| Path::new("."));
    let index: BTreeMap<&str, u32> = sidecar
        .node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();
    let mut reader = csv_reader(&dir.join(&sidecar.edge_file))?;
    let mut edges = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_index = i + 1;
        let src = *index.get(row.get(0).unwrap_or_default()).ok_or_else(|| {
            CliError::usage(format!(
                "edge row {row_index}: source not in sidecar node list"
            ))
        })?;
        let dst = *index.get(row.get(1).unwrap_or_default()).ok_or_else(|| {
            CliError::usage(format!(
                "edge row {row_index}: target not in sidecar node list"
            ))
        })?;
        let weight: f64 = row
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|_| CoreError::Parse {
                row: row_index,
                message: "weight is not a number".into(),
            })?;
        edges.insert((src, dst), weight);
    }
    let graph = DependencyGraph::from_edges(sidecar.view, sidecar.node_ids, edges)?;
    Ok((graph, sidecar.project, sidecar.version))
}

/// Versioned parameter checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointFile {
    pub format_version: u32,
    pub params: BiGgnnParams,
}

pub fn write_checkpoint(path: &Path, params: &BiGgnnParams) -> CliResult<()> {
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        params: params.clone(),
    };
    fs::write(path, serde_json::to_string(&file)? + "\n")?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> CliResult<BiGgnnParams> {
    let text = open_text(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    Ok(file.params)
}

/// Versioned experiment report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub report: ExperimentReport,
}

pub fn write_report(path: &Path, report: &ExperimentReport) -> CliResult<()> {
    let file = ReportFile {
        format_version: FORMAT_VERSION,
        report: report.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}

pub fn read_report(path: &Path) -> CliResult<ExperimentReport> {
    let text = open_text(path)?;
    let file: ReportFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("malformed report {}: {e}", path.display())))?;
    Ok(file.report)
}

/// One summary row per campaign, medians only.
pub fn write_summary_csv(path: &Path, reports: &[&ExperimentReport]) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "project", "version", "protocol", "view", "reps", "auc", "recall", "brier", "pf", "f1",
    ])?;
    for report in reports {
        writer.write_record([
            report.project.as_str(),
            report.version.as_str(),
            report.protocol.as_str(),
            report.view.as_str(),
            &report.reps.len().to_string(),
            &fmt_f64(report.medians.auc),
            &fmt_f64(report.medians.recall),
            &fmt_f64(report.medians.brier),
            &fmt_f64(report.medians.pf),
            &fmt_f64(report.medians.f1),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-file prediction dump: `file,prob_defective,label`.
pub fn write_predictions(
    path: &Path,
    files: &[String],
    probs: &[f64],
    labels: &[u8],
) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["file", "prob_defective", "label"])?;
    for ((file, prob), label) in files.iter().zip(probs).zip(labels) {
        writer.write_record([file.as_str(), &fmt_f64(*prob), &label.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// External baseline predictions: `file,prob_defective`.
pub fn read_baseline(path: &Path) -> CliResult<BTreeMap<String, f64>> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers != ["file", "prob_defective"] {
        return Err(CliError::usage(format!(
            "{}: expected header `file,prob_defective`",
            path.display()
        )));
    }
    let mut out = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let file = row.get(0).unwrap_or_default().to_string();
        let prob: f64 = row
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|_| CoreError::Parse {
                row: i + 1,
                message: "prob_defective is not a number".into(),
            })?;
        if !(0.0..=1.0).contains(&prob) {
            return Err(CoreError::Validation(format!(
                "prob_defective {prob} outside [0, 1] at row {}",
                i + 1
            ))
            .into());
        }
        out.insert(file, prob);
    }
    Ok(out)
}

/// Statistical comparison of two campaigns, one entry per measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub format_version: u32,
    pub a: String,
    pub b: String,
    pub reps: usize,
    pub results: BTreeMap<String, StatTestResult>,
}

pub fn write_comparison(path: &Path, comparison: &ComparisonFile) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(comparison)? + "\n")?;
    Ok(())
}

/// Per-view neighbor-share analysis output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborShareFile {
    pub format_version: u32,
    pub project: String,
    pub version: String,
    /// Keyed by view name; per-node shares follow the sidecar node order.
    pub views: BTreeMap<String, NeighborShareReport>,
}

pub fn write_neighbor_share_json(path: &Path, file: &NeighborShareFile) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(file)? + "\n")?;
    Ok(())
}

/// One row, one `p_total` column per view.
pub fn write_neighbor_share_csv(path: &Path, file: &NeighborShareFile) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["project".to_string(), "version".to_string()];
    header.extend(file.views.keys().cloned());
    writer.write_record(&header)?;
    let mut row = vec![file.project.clone(), file.version.clone()];
    row.extend(file.views.values().map(|r| fmt_f64(r.p_total)));
    writer.write_record(&row)?;
    writer.flush()?;
    Ok(())
}

/// Separability analysis output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparabilityFile {
    pub format_version: u32,
    pub source: String,
    pub report: SeparabilityReport,
}

pub fn write_separability_json(path: &Path, file: &SeparabilityFile) -> CliResult<()> {
    fs::write(path, serde_json::to_string_pretty(file)? + "\n")?;
    Ok(())
}

pub fn write_separability_csv(path: &Path, file: &SeparabilityFile) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["source", "distance", "defective", "clean"])?;
    writer.write_record([
        file.source.as_str(),
        &fmt_f64(file.report.distance),
        &file.report.defective.to_string(),
        &file.report.clean.to_string(),
    ])?;
    writer.flush()?;
    Ok(())
}

/// Feature dump: `file,label,<feature columns...>`; the feature columns are
/// read as-is, whatever their names.
pub fn parse_feature_dump(path: &Path) -> CliResult<(NodeFeatureMatrix, Vec<u8>, Vec<String>)> {
    let mut reader = csv_reader(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.len() < 3 || headers[0] != "file" || headers[1] != "label" {
        return Err(CliError::usage(format!(
            "{}: expected header `file,label,<features...>`",
            path.display()
        )));
    }
    let width = headers.len() - 2;
    let mut matrix = NodeFeatureMatrix::new(width);
    let mut labels = Vec::new();
    let mut files = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_index = i + 1;
        files.push(row.get(0).unwrap_or_default().to_string());
        let label: u8 = match row.get(1).unwrap_or_default() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CoreError::Parse {
                    row: row_index,
                    message: format!("label `{other}` is not 0 or 1"),
                }
                .into())
            }
        };
        labels.push(label);
        let mut values = Vec::with_capacity(width);
        for j in 0..width {
            let cell = row.get(2 + j).unwrap_or_default();
            let value: f64 = cell.parse().map_err(|_| CoreError::Parse {
                row: row_index,
                message: format!("feature column {}: `{cell}` is not a number", headers[2 + j]),
            })?;
            values.push(value);
        }
        matrix.push_row(&values);
    }
    Ok((matrix, labels, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvsdg_core::graph::build_cdg;
    use mvsdg_core::synth::{generate_synthetic, SyntheticConfig};
    use tempfile::TempDir;

    fn small_synth(seed: u64) -> VersionDataset {
        generate_synthetic(
            &SyntheticConfig {
                n_nodes: 20,
                defect_rate: 0.3,
                n_developers: 4,
                mean_degree: 2.0,
                n_metrics: 3,
                ..SyntheticConfig::default()
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn dataset_round_trips_through_directory() {
        let dir = TempDir::new().unwrap();
        let dataset = small_synth(5);
        write_dataset(dir.path(), &dataset).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(dataset, loaded);
    }

    #[test]
    fn metrics_header_mismatch_names_missing_column() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(&path, "file,label,m0\na,1,0.5\n").unwrap();
        let manifest = MetricManifest::numbered(2); // expects m0 and m1
        let err = parse_metrics(&path, &manifest).unwrap_err();
        assert!(err.to_string().contains("m1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn metrics_non_numeric_cell_reports_row() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(&path, "file,label,m0\na,1,0.5\nb,0,oops\n").unwrap();
        let manifest = MetricManifest::numbered(1);
        let err = parse_metrics(&path, &manifest).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn metrics_duplicate_file_rejected() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(&path, "file,label,m0\na,1,0.5\na,0,0.25\n").unwrap();
        let manifest = MetricManifest::numbered(1);
        let err = parse_metrics(&path, &manifest).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn metrics_header_only_yields_empty() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("metrics.csv");
        std::fs::write(&path, "file,label,m0\n").unwrap();
        let manifest = MetricManifest::numbered(1);
        assert!(parse_metrics(&path, &manifest).unwrap().is_empty());
    }

    #[test]
    fn dependencies_reject_unknown_kind() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("deps.csv");
        std::fs::write(&path, "src,dst,kind,count\nC,A,ctrl,3\n").unwrap();
        let err = parse_dependencies(&path).unwrap_err();
        assert!(err.to_string().contains("ctrl"), "{err}");
    }

    #[test]
    fn dependencies_parse_simple_row() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("deps.csv");
        std::fs::write(&path, "src,dst,kind,count\nC,A,call,3\n").unwrap();
        let edges = parse_dependencies(&path).unwrap();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].src, "C");
        assert_eq!(edges[0].dst, "A");
        assert_eq!(edges[0].kind, DependencyKind::Call);
        assert_eq!(edges[0].count, 3);
    }

    #[test]
    fn dependencies_reject_zero_count() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("deps.csv");
        std::fs::write(&path, "src,dst,kind,count\nC,A,call,0\n").unwrap();
        assert!(parse_dependencies(&path).is_err());
    }

    #[test]
    fn ownership_deduplicates_and_rejects_empty_developer() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("own.csv");
        std::fs::write(&path, "file,developer\nA,d1\nA,d1\nA,d2\n").unwrap();
        let records = parse_ownership(&path).unwrap();
        assert_eq!(records.len(), 2);

        std::fs::write(&path, "file,developer\nA,\n").unwrap();
        assert!(parse_ownership(&path).is_err());
    }

    #[test]
    fn ownership_empty_file_is_empty() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("own.csv");
        std::fs::write(&path, "file,developer\n").unwrap();
        assert!(parse_ownership(&path).unwrap().is_empty());
    }

    #[test]
    fn graph_export_round_trips_bit_exactly() {
        let dir = TempDir::new().unwrap();
        let dataset = small_synth(9);
        let graph = build_cdg(&dataset.records, &dataset.dep_edges).unwrap();
        let sidecar = export_graph(dir.path(), &graph, "p", "1.0").unwrap();
        let (loaded, project, _) = import_graph(&sidecar).unwrap();
        assert_eq!(graph, loaded);
        assert_eq!(project, "p");
        // Weights compare bit-for-bit.
        for (k, v) in graph.edges() {
            assert_eq!(loaded.edges()[k].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        use mvsdg_core::model::ModelConfig;
        use mvsdg_core::rng::seed_rng;
        let dir = TempDir::new().unwrap();
        let config = ModelConfig {
            hidden_size: 4,
            mlp_hidden: vec![3],
            ..ModelConfig::default()
        };
        let params = BiGgnnParams::init(5, &config, &mut seed_rng(3));
        let path = dir.path().join("ckpt.json");
        write_checkpoint(&path, &params).unwrap();
        let loaded = read_checkpoint(&path).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn baseline_rejects_out_of_range_probability() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("baseline.csv");
        std::fs::write(&path, "file,prob_defective\na,1.5\n").unwrap();
        assert!(read_baseline(&path).is_err());
    }

    #[test]
    fn missing_file_is_usage_error_naming_path() {
        let err = parse_dependencies(Path::new("/nonexistent/deps.csv")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/deps.csv"));
    }
}
