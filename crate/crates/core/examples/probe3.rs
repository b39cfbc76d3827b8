// Scratch: full paired 10-rep comparison at acceptance scale.

use mvsdg_core::eval::run_wpdp;
use mvsdg_core::graph::{GraphBuildOptions, GraphView};
use mvsdg_core::model::ModelConfig;
use mvsdg_core::sampling::SamplingRatio;
use mvsdg_core::synth::{generate_synthetic, SyntheticConfig};

fn main() {
    let synth = SyntheticConfig {
        n_nodes: 300,
        defect_rate: 0.15,
        homophily: 0.9,
        n_developers: 30,
        mean_degree: 4.0,
        n_metrics: 16,
    };
    let dataset = generate_synthetic(&synth, 2024).unwrap();

    for (hidden, mlp) in [(32usize, vec![32, 16])] {
        let model = ModelConfig {
            hidden_size: hidden,
            graph_hops: 2,
            learning_rate: 0.001,
            batch_size: 32,
            mlp_hidden: mlp,
            max_epochs: 80,
            seed: 99,
            ..ModelConfig::default()
        };
        let options = GraphBuildOptions::default();
        let t0 = std::time::Instant::now();
        let cdg = run_wpdp(&dataset, GraphView::Cdg, &model, &options, 10).unwrap();
        let ddg = run_wpdp(&dataset, GraphView::Ddg, &model, &options, 10).unwrap();
        let msdg = run_wpdp(&dataset, GraphView::Msdg, &model, &options, 10).unwrap();
        let wins = |a: &mvsdg_core::eval::ExperimentReport,
                    b: &mvsdg_core::eval::ExperimentReport| {
            a.reps
                .iter()
                .zip(&b.reps)
                .filter(|(x, y)| x.metrics.f1 >= y.metrics.f1)
                .count()
        };
        println!(
            "hidden={hidden}: msdg auc_med={:.3} f1_med={:.3} | cdg f1={:.3} ddg f1={:.3} | msdg>=cdg {}x/10, msdg>=ddg {}x/10 | {:.0?}",
            msdg.medians.auc,
            msdg.medians.f1,
            cdg.medians.f1,
            ddg.medians.f1,
            wins(&msdg, &cdg),
            wins(&msdg, &ddg),
            t0.elapsed()
        );
        let f1s = |r: &mvsdg_core::eval::ExperimentReport| {
            r.reps
                .iter()
                .map(|x| (x.metrics.f1 * 100.0).round() / 100.0)
                .collect::<Vec<_>>()
        };
        println!("  msdg f1 per rep: {:?}", f1s(&msdg));
        println!("  cdg  f1 per rep: {:?}", f1s(&cdg));
        println!("  ddg  f1 per rep: {:?}", f1s(&ddg));
    }
}
