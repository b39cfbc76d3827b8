//! Evaluation: the five measures, the statistical tests, and the
//! within-project / cross-project bootstrap protocols.

pub mod metrics;
pub mod protocol;
pub mod stats;

pub use metrics::{
    auc, brier, confusion_and_threshold_metrics, metric_report, Confusion, Measure, MetricReport,
    ThresholdReport, DEFAULT_THRESHOLD,
};
pub use protocol::{
    cpdp_repetition, cpdp_stream, prepare_context, run_cpdp, run_cpdp_campaign, run_wpdp,
    wpdp_repetition, wpdp_split, wpdp_stream, ExperimentReport, MeasureMedians, Protocol,
    ProtocolContext, RepetitionRecord,
};
pub use stats::{
    bonferroni, cliffs_delta, compare_measurements, compare_reports, wilcoxon_signed_rank,
    StatTestResult, WilcoxonOutcome, LARGE_EFFECT_THRESHOLD, SIGNIFICANCE_LEVEL,
};
