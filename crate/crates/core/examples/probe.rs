// Scratch calibration probe; not part of the deliverable test suite.

use mvsdg_core::eval::{run_wpdp, Measure};
use mvsdg_core::graph::{GraphBuildOptions, GraphView};
use mvsdg_core::model::ModelConfig;
use mvsdg_core::synth::{generate_synthetic, SyntheticConfig};

fn main() {
    let config = SyntheticConfig {
        n_nodes: 300,
        defect_rate: 0.15,
        homophily: 0.9,
        n_developers: 30,
        mean_degree: 4.0,
        n_metrics: 16,
    };
    let dataset = generate_synthetic(&config, 77).unwrap();
    println!(
        "dataset: {} nodes, rate {:.3}, {} dep edges, {} ownership rows",
        dataset.len(),
        dataset.defect_rate(),
        dataset.dep_edges.len(),
        dataset.ownership.len()
    );

    let model = ModelConfig {
        hidden_size: 32,
        graph_hops: 2,
        learning_rate: 0.01,
        batch_size: 32,
        mlp_hidden: vec![32, 16],
        max_epochs: 120,
        seed: 7,
        ..ModelConfig::default()
    };
    let options = GraphBuildOptions::default();
    for view in [GraphView::Cdg, GraphView::Ddg, GraphView::Msdg] {
        let t0 = std::time::Instant::now();
        let report = run_wpdp(&dataset, view, &model, &options, 3).unwrap();
        println!(
            "{view}: median auc {:.4} f1 {:.4} recall {:.4} (selected epochs {:?}) in {:.1?}",
            report.medians.auc,
            report.medians.f1,
            report.medians.recall,
            report
                .reps
                .iter()
                .map(|r| r.selected_epoch)
                .collect::<Vec<_>>(),
            t0.elapsed()
        );
        let _ = report.measure_series(Measure::Auc);
    }
}
