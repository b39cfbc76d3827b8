//! Within-project and cross-project bootstrap protocols.
//!
//! "Out-of-sample bootstrap" is realized as repeated fresh random splits
//! with disjoint train/val/test per repetition. Each repetition owns an RNG
//! stream derived from the run seed and the repetition index, so campaigns
//! can run repetitions in any order (or in parallel) and still produce
//! identical reports. Splits that leave any partition single-class are
//! redrawn and counted, since AUC (model selection and test evaluation) is
//! undefined on a single class.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_metrics, VersionDataset};
use crate::error::{Error, Result};
use crate::eval::metrics::{median, metric_report, Measure, MetricReport, DEFAULT_THRESHOLD};
use crate::graph::{build_view, DependencyGraph, GraphBuildOptions, GraphView, NodeFeatureMatrix};
use crate::model::{forward, train, ModelConfig};
use crate::rng::stream_rng;
use crate::sampling::SplitMasks;

const WPDP_VAL_FRACTION: f64 = 0.15;
const WPDP_TEST_FRACTION: f64 = 0.15;
const CPDP_VAL_FRACTION: f64 = 0.20;
const MAX_REDRAWS: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Wpdp,
    Cpdp,
}

impl Protocol {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wpdp" => Ok(Self::Wpdp),
            "cpdp" => Ok(Self::Cpdp),
            other => Err(Error::Validation(format!(
                "unknown protocol `{other}` (expected wpdp or cpdp)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Wpdp => "wpdp",
            Self::Cpdp => "cpdp",
        }
    }
}

/// One dataset prepared for training: normalized metrics, one built and
/// weight-normalized graph view, labels.
pub struct ProtocolContext {
    pub graph: DependencyGraph,
    pub features: NodeFeatureMatrix,
    pub labels: Vec<u8>,
    pub project: String,
    pub version: String,
}

impl ProtocolContext {
    pub fn id(&self) -> String {
        format!("{}@{}", self.project, self.version)
    }
}

/// Normalize the dataset's metrics and build the requested graph view.
pub fn prepare_context(
    dataset: &VersionDataset,
    view: GraphView,
    options: &GraphBuildOptions,
) -> Result<ProtocolContext> {
    let normalized = normalize_metrics(dataset)?;
    let graph = build_view(&normalized, view, options)?;
    let features = NodeFeatureMatrix::from_dataset(&normalized);
    Ok(ProtocolContext {
        graph,
        features,
        labels: normalized.labels(),
        project: normalized.project,
        version: normalized.version,
    })
}

/// RNG stream for one within-project repetition.
pub fn wpdp_stream(rep: u32) -> u64 {
    rep as u64
}

/// RNG stream for one cross-project repetition; disjoint from every
/// within-project stream and every other source's streams.
pub fn cpdp_stream(source_index: u32, rep: u32) -> u64 {
    ((source_index as u64 + 1) << 32) | rep as u64
}

fn split_counts(n: usize, fraction: f64) -> usize {
    (crate::math::round(n as f64 * fraction) as usize).max(1)
}

fn draw_masks(n: usize, val: usize, test: usize, rng: &mut impl Rng) -> SplitMasks {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut masks = SplitMasks {
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
    };
    for (k, &i) in order.iter().enumerate() {
        if k < val {
            masks.val[i] = true;
        } else if k < val + test {
            masks.test[i] = true;
        } else {
            masks.train[i] = true;
        }
    }
    masks
}

fn both_classes(labels: &[u8], mask: &[bool]) -> bool {
    let mut seen = [false; 2];
    for (l, &m) in labels.iter().zip(mask) {
        if m {
            seen[*l as usize] = true;
        }
    }
    seen[0] && seen[1]
}

/// Redraw until every requested partition contains both classes.
fn draw_valid_split(
    labels: &[u8],
    val: usize,
    test: usize,
    rng: &mut impl Rng,
) -> Result<(SplitMasks, u32)> {
    let n = labels.len();
    if n < val + test + 1 {
        return Err(Error::Validation(format!(
            "{n} nodes cannot host a split with {val} validation and {test} test nodes"
        )));
    }
    let mut redraws = 0;
    loop {
        let masks = draw_masks(n, val, test, rng);
        let ok = both_classes(labels, &masks.train)
            && both_classes(labels, &masks.val)
            && (test == 0 || both_classes(labels, &masks.test));
        if ok {
            return Ok((masks, redraws));
        }
        redraws += 1;
        if redraws > MAX_REDRAWS {
            return Err(Error::Training(format!(
                "no split with both classes in every partition after {MAX_REDRAWS} redraws"
            )));
        }
    }
}

/// One repetition's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub rep: u32,
    /// RNG stream the repetition consumed (derived from the run seed).
    pub stream: u64,
    /// Source dataset id for cross-project repetitions.
    pub source: Option<String>,
    /// Splits redrawn because a partition was single-class.
    pub redraws: u32,
    pub selected_epoch: usize,
    /// Validation AUC at the selected epoch.
    pub val_auc: f64,
    pub n_synthetic: usize,
    pub metrics: MetricReport,
}

/// Median of each measure over the repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureMedians {
    pub auc: f64,
    pub recall: f64,
    pub brier: f64,
    pub pf: f64,
    pub f1: f64,
}

impl MeasureMedians {
    pub fn from_records(records: &[RepetitionRecord]) -> Self {
        let series = |measure: Measure| -> f64 {
            let values: Vec<f64> = records.iter().map(|r| measure.of(&r.metrics)).collect();
            median(&values)
        };
        Self {
            auc: series(Measure::Auc),
            recall: series(Measure::Recall),
            brier: series(Measure::Brier),
            pf: series(Measure::Pf),
            f1: series(Measure::F1),
        }
    }

    pub fn of(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Auc => self.auc,
            Measure::Recall => self.recall,
            Measure::Brier => self.brier,
            Measure::Pf => self.pf,
            Measure::F1 => self.f1,
        }
    }
}

/// Full campaign record: per-repetition reports, medians, and everything
/// needed to reproduce any number in it (config, seed, stream scheme).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: Protocol,
    pub view: GraphView,
    /// Evaluated dataset (the target, for cross-project campaigns).
    pub project: String,
    pub version: String,
    pub config: ModelConfig,
    pub graph_options: GraphBuildOptions,
    pub reps: Vec<RepetitionRecord>,
    pub medians: MeasureMedians,
    /// Source and target were the same dataset (test nodes were trained on).
    pub leakage_warning: bool,
    /// Some repetitions are missing because a run failed.
    pub partial: bool,
}

impl ExperimentReport {
    pub fn measure_series(&self, measure: Measure) -> Vec<f64> {
        self.reps.iter().map(|r| measure.of(&r.metrics)).collect()
    }

    pub fn metric_reports(&self) -> Vec<MetricReport> {
        self.reps.iter().map(|r| r.metrics).collect()
    }
}

/// Recompute the split a within-project repetition used, from the labels
/// and the run seed alone. Lets external predictions be evaluated on
/// exactly the test nodes a recorded campaign saw.
pub fn wpdp_split(labels: &[u8], seed: u64, rep: u32) -> Result<(SplitMasks, u32)> {
    let mut rng = stream_rng(seed, wpdp_stream(rep));
    let n = labels.len();
    let val = split_counts(n, WPDP_VAL_FRACTION);
    let test = split_counts(n, WPDP_TEST_FRACTION);
    draw_valid_split(labels, val, test, &mut rng)
}

/// One within-project repetition: fresh 70/15/15 split, train, test-split
/// metrics.
pub fn wpdp_repetition(
    ctx: &ProtocolContext,
    config: &ModelConfig,
    rep: u32,
) -> Result<RepetitionRecord> {
    let stream = wpdp_stream(rep);
    let mut rng = stream_rng(config.seed, stream);
    let n = ctx.labels.len();
    let val = split_counts(n, WPDP_VAL_FRACTION);
    let test = split_counts(n, WPDP_TEST_FRACTION);
    let (masks, redraws) = draw_valid_split(&ctx.labels, val, test, &mut rng)?;
    let outcome = train(
        &ctx.graph,
        &ctx.features,
        &ctx.labels,
        &masks,
        config,
        &mut rng,
    )?;
    let test_nodes = SplitMasks::indices(&masks.test);
    let scores: Vec<f64> = test_nodes.iter().map(|&i| outcome.probs[i]).collect();
    let labels: Vec<u8> = test_nodes.iter().map(|&i| ctx.labels[i]).collect();
    let metrics = metric_report(&scores, &labels, DEFAULT_THRESHOLD)?;
    let val_auc = outcome.history.val_metric[outcome.history.selected_epoch - 1];
    Ok(RepetitionRecord {
        rep,
        stream,
        source: None,
        redraws,
        selected_epoch: outcome.history.selected_epoch,
        val_auc,
        n_synthetic: outcome.n_synthetic,
        metrics,
    })
}

/// Within-project campaign over `reps` fresh splits; `config.seed` is the
/// master seed.
pub fn run_wpdp(
    dataset: &VersionDataset,
    view: GraphView,
    config: &ModelConfig,
    options: &GraphBuildOptions,
    reps: u32,
) -> Result<ExperimentReport> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let rate = dataset.defect_rate();
    if rate == 0.0 || rate == 1.0 {
        return Err(Error::Validation(
            "dataset must contain both defective and clean files".into(),
        ));
    }
    let ctx = prepare_context(dataset, view, options)?;
    let mut records = Vec::with_capacity(reps as usize);
    for rep in 0..reps {
        records.push(wpdp_repetition(&ctx, config, rep)?);
    }
    Ok(ExperimentReport {
        protocol: Protocol::Wpdp,
        view,
        project: ctx.project.clone(),
        version: ctx.version.clone(),
        config: config.clone(),
        graph_options: *options,
        medians: MeasureMedians::from_records(&records),
        reps: records,
        leakage_warning: false,
        partial: false,
    })
}

/// One cross-project repetition: 80/20 split of the source for training and
/// model selection, evaluation on every target node over the target's graph.
pub fn cpdp_repetition(
    source: &ProtocolContext,
    target: &ProtocolContext,
    config: &ModelConfig,
    source_index: u32,
    rep: u32,
) -> Result<RepetitionRecord> {
    let stream = cpdp_stream(source_index, rep);
    let mut rng = stream_rng(config.seed, stream);
    let n = source.labels.len();
    let val = split_counts(n, CPDP_VAL_FRACTION);
    let (masks, redraws) = draw_valid_split(&source.labels, val, 0, &mut rng)?;
    let outcome = train(
        &source.graph,
        &source.features,
        &source.labels,
        &masks,
        config,
        &mut rng,
    )?;
    let probs = forward(&target.graph, &target.features, &outcome.params, config)?;
    let scores: Vec<f64> = (0..target.labels.len())
        .map(|i| probs.values[i * 2 + 1])
        .collect();
    let metrics = metric_report(&scores, &target.labels, DEFAULT_THRESHOLD)?;
    let val_auc = outcome.history.val_metric[outcome.history.selected_epoch - 1];
    Ok(RepetitionRecord {
        rep,
        stream,
        source: Some(source.id()),
        redraws,
        selected_epoch: outcome.history.selected_epoch,
        val_auc,
        n_synthetic: outcome.n_synthetic,
        metrics,
    })
}

fn check_cpdp_pair(source: &VersionDataset, target: &VersionDataset) -> Result<bool> {
    if source.manifest != target.manifest {
        return Err(Error::Validation(format!(
            "source {}@{} and target {}@{} use different metric manifests",
            source.project, source.version, target.project, target.version
        )));
    }
    let rate = source.defect_rate();
    if rate == 0.0 || rate == 1.0 {
        return Err(Error::Validation(
            "source dataset must contain both classes".into(),
        ));
    }
    Ok(source.project == target.project && source.version == target.version)
}

/// Cross-project campaign with a single source.
pub fn run_cpdp(
    source: &VersionDataset,
    target: &VersionDataset,
    view: GraphView,
    config: &ModelConfig,
    options: &GraphBuildOptions,
    reps: u32,
) -> Result<ExperimentReport> {
    run_cpdp_campaign(&[source], target, view, config, options, reps)
}

/// Cross-project campaign over several source datasets; `reps` repetitions
/// per source, recorded source-major.
pub fn run_cpdp_campaign(
    sources: &[&VersionDataset],
    target: &VersionDataset,
    view: GraphView,
    config: &ModelConfig,
    options: &GraphBuildOptions,
    reps: u32,
) -> Result<ExperimentReport> {
    if sources.is_empty() {
        return Err(Error::Config("at least one source dataset required".into()));
    }
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let target_rate = target.defect_rate();
    if target_rate == 0.0 || target_rate == 1.0 {
        return Err(Error::Validation(
            "target dataset must contain both classes".into(),
        ));
    }
    let mut leakage = false;
    for source in sources {
        leakage |= check_cpdp_pair(source, target)?;
    }
    let target_ctx = prepare_context(target, view, options)?;
    let mut records = Vec::with_capacity(sources.len() * reps as usize);
    for (source_index, source) in sources.iter().enumerate() {
        let source_ctx = prepare_context(source, view, options)?;
        for rep in 0..reps {
            records.push(cpdp_repetition(
                &source_ctx,
                &target_ctx,
                config,
                source_index as u32,
                rep,
            )?);
        }
    }
    Ok(ExperimentReport {
        protocol: Protocol::Cpdp,
        view,
        project: target_ctx.project.clone(),
        version: target_ctx.version.clone(),
        config: config.clone(),
        graph_options: *options,
        medians: MeasureMedians::from_records(&records),
        reps: records,
        leakage_warning: leakage,
        partial: false,
    })
}
