// Scratch: inspect validation trajectories per view and learning rate.

use mvsdg_core::dataset::normalize_metrics;
use mvsdg_core::eval::metrics::metric_report;
use mvsdg_core::graph::{build_view, GraphBuildOptions, GraphView, NodeFeatureMatrix};
use mvsdg_core::model::{train, ModelConfig};
use mvsdg_core::rng::stream_rng;
use mvsdg_core::sampling::SplitMasks;
use mvsdg_core::synth::{generate_synthetic, SyntheticConfig};
use rand::seq::SliceRandom;

fn main() {
    let config = SyntheticConfig {
        n_nodes: 300,
        defect_rate: 0.15,
        homophily: 0.9,
        n_developers: 30,
        mean_degree: 4.0,
        n_metrics: 16,
    };
    let dataset = normalize_metrics(&generate_synthetic(&config, 77).unwrap()).unwrap();
    let features = NodeFeatureMatrix::from_dataset(&dataset);
    let labels = dataset.labels();

    // fixed split
    let mut rng = stream_rng(123, 0);
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut masks = SplitMasks {
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
    };
    for (k, &i) in order.iter().enumerate() {
        if k < 45 {
            masks.val[i] = true;
        } else if k < 90 {
            masks.test[i] = true;
        } else {
            masks.train[i] = true;
        }
    }

    for lr in [0.01, 0.003, 0.001] {
        for view in [GraphView::Cdg, GraphView::Ddg, GraphView::Msdg] {
            let graph = build_view(&dataset, view, &GraphBuildOptions::default()).unwrap();
            let model = ModelConfig {
                hidden_size: 32,
                graph_hops: 2,
                learning_rate: lr,
                batch_size: 32,
                mlp_hidden: vec![32, 16],
                max_epochs: 80,
                seed: 7,
                ..ModelConfig::default()
            };
            let mut train_rng = stream_rng(7, 1);
            let outcome = train(&graph, &features, &labels, &masks, &model, &mut train_rng).unwrap();
            let test_nodes = SplitMasks::indices(&masks.test);
            let scores: Vec<f64> = test_nodes.iter().map(|&i| outcome.probs[i]).collect();
            let tl: Vec<u8> = test_nodes.iter().map(|&i| labels[i]).collect();
            let m = metric_report(&scores, &tl, 0.5).unwrap();
            let h = &outcome.history;
            let last = h.val_metric.len();
            println!(
                "lr={lr} {view}: sel={} test auc={:.3} f1={:.3} | val[0..5]={:?} val[{}..]={:?} loss[0..3]={:?} loss_end={:?}",
                h.selected_epoch,
                m.auc,
                m.f1,
                &h.val_metric[..5.min(last)]
                    .iter()
                    .map(|v| (v * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                last - 3,
                &h.val_metric[last - 3..]
                    .iter()
                    .map(|v| (v * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                &h.train_loss[..3.min(last)]
                    .iter()
                    .map(|v| (v * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
                &h.train_loss[last - 2..]
                    .iter()
                    .map(|v| (v * 1000.0).round() / 1000.0)
                    .collect::<Vec<_>>(),
            );
        }
    }
}
