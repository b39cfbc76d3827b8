//! The BiGGNN defect predictor.
//!
//! Forward pass: project the metric vectors to the hidden size, then for K
//! hops sum-aggregate the previous representations over in-neighbors and
//! out-neighbors separately, fuse the two aggregates through a gated sum
//! (`z . a + (1 - z) . b` with `z = sigmoid(Wz [a; b; a.b; a-b] + bz)`, the
//! gate applied to the in-neighbor side), and update each node state with a
//! GRU whose input is the fused aggregate. A tanh MLP head maps the final
//! states to two-class probabilities via softmax.
//!
//! Training runs full-graph message passing with the loss masked to
//! mini-batches of training nodes, oversamples the training minority once
//! before the first epoch, and keeps the parameter snapshot from the epoch
//! with the best validation AUC.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::metrics::auc;
use crate::graph::{DependencyGraph, NodeFeatureMatrix};
use crate::nn::{
    adam_step, AdamHyper, AdamState, GruParams, GruVars, NeighborSpec, Tape, Tensor, Var,
};
use crate::sampling::{smote_augment, AugmentedDataset, SamplingConfig, SamplingRatio, SplitMasks};

/// Message-passing direction relative to a node: `Backward` reads
/// in-neighbors, `Forward` reads out-neighbors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Backward,
    Forward,
}

/// Hyperparameters and run settings for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden_size: usize,
    pub graph_hops: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub mlp_hidden: Vec<usize>,
    /// `None` disables oversampling (ablation runs).
    pub sampling_ratio: Option<SamplingRatio>,
    pub max_epochs: usize,
    pub seed: u64,
    /// Scale neighbor sums by edge weights instead of plain sums
    /// (sensitivity mode; plain sums are the default).
    pub weighted_aggregation: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_size: 32,
            graph_hops: 2,
            learning_rate: 0.01,
            batch_size: 32,
            mlp_hidden: vec![32, 16],
            sampling_ratio: Some(SamplingRatio::Auto),
            max_epochs: 100,
            seed: 0,
            weighted_aggregation: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::Config("hidden_size must be positive".into()));
        }
        if self.graph_hops == 0 {
            return Err(Error::Config("graph_hops must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if let Some(SamplingRatio::Fixed(r)) = self.sampling_ratio {
            if !(r > 0.0) {
                return Err(Error::Config(format!(
                    "sampling_ratio must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }
}

/// The tuning grid: every categorical hyperparameter with its value set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub hidden_sizes: Vec<usize>,
    pub graph_hops: Vec<usize>,
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub mlp_hiddens: Vec<Vec<usize>>,
    pub sampling_ratios: Vec<SamplingRatio>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![16, 32, 64, 128],
            graph_hops: vec![1, 2, 3, 4],
            learning_rates: vec![0.01, 0.001, 0.0005, 0.0001],
            batch_sizes: vec![8, 16, 32],
            mlp_hiddens: vec![vec![32, 16], vec![64, 32]],
            sampling_ratios: vec![
                SamplingRatio::Fixed(0.5),
                SamplingRatio::Fixed(1.0),
                SamplingRatio::Fixed(2.0),
                SamplingRatio::Fixed(3.0),
                SamplingRatio::Auto,
            ],
        }
    }
}

impl SearchSpace {
    /// Draw one configuration uniformly from the Cartesian product of the
    /// value sets; epochs, seed and aggregation mode come from `template`.
    pub fn sample(&self, template: &ModelConfig, rng: &mut impl Rng) -> ModelConfig {
        ModelConfig {
            hidden_size: self.hidden_sizes[rng.random_range(0..self.hidden_sizes.len())],
            graph_hops: self.graph_hops[rng.random_range(0..self.graph_hops.len())],
            learning_rate: self.learning_rates[rng.random_range(0..self.learning_rates.len())],
            batch_size: self.batch_sizes[rng.random_range(0..self.batch_sizes.len())],
            mlp_hidden: self.mlp_hiddens[rng.random_range(0..self.mlp_hiddens.len())].clone(),
            sampling_ratio: Some(
                self.sampling_ratios[rng.random_range(0..self.sampling_ratios.len())],
            ),
            max_epochs: template.max_epochs,
            seed: template.seed,
            weighted_aggregation: template.weighted_aggregation,
        }
    }

    /// Whether every tunable field of `config` belongs to this grid.
    pub fn contains(&self, config: &ModelConfig) -> bool {
        self.hidden_sizes.contains(&config.hidden_size)
            && self.graph_hops.contains(&config.graph_hops)
            && self.learning_rates.contains(&config.learning_rate)
            && self.batch_sizes.contains(&config.batch_size)
            && self.mlp_hiddens.contains(&config.mlp_hidden)
            && config
                .sampling_ratio
                .is_some_and(|r| self.sampling_ratios.contains(&r))
    }
}

/// One fully connected layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearLayer {
    pub w: Tensor,
    pub b: Tensor,
}

impl LinearLayer {
    fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Self {
            w: Tensor::uniform_init(&[input, output], input, rng),
            b: Tensor::zeros(&[1, output]).with_grad(),
        }
    }
}

/// All learnable parameters: input projection, fusion gate, GRU (shared
/// across hops) and the MLP head ending in a 2-class layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiGgnnParams {
    pub proj: LinearLayer,
    pub fuse_w: Tensor,
    pub fuse_b: Tensor,
    pub gru: GruParams,
    pub mlp: Vec<LinearLayer>,
}

impl BiGgnnParams {
    pub fn init(input_dim: usize, config: &ModelConfig, rng: &mut impl Rng) -> Self {
        let hidden = config.hidden_size;
        let proj = LinearLayer::init(input_dim, hidden, rng);
        let fuse_w = Tensor::uniform_init(&[4 * hidden, hidden], 4 * hidden, rng);
        let fuse_b = Tensor::zeros(&[1, hidden]).with_grad();
        let gru = GruParams::init(hidden, hidden, rng);
        let mut mlp = Vec::new();
        let mut width = hidden;
        for &next in &config.mlp_hidden {
            mlp.push(LinearLayer::init(width, next, rng));
            width = next;
        }
        mlp.push(LinearLayer::init(width, 2, rng));
        Self {
            proj,
            fuse_w,
            fuse_b,
            gru,
            mlp,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.gru.hidden_size()
    }

    pub fn input_dim(&self) -> usize {
        self.proj.w.shape[0]
    }

    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = vec![
            ("proj.w".into(), &self.proj.w),
            ("proj.b".into(), &self.proj.b),
            ("fuse.w".into(), &self.fuse_w),
            ("fuse.b".into(), &self.fuse_b),
        ];
        for (name, tensor) in self.gru.named() {
            out.push((name.into(), tensor));
        }
        for (i, layer) in self.mlp.iter().enumerate() {
            out.push((format!("mlp.{i}.w"), &layer.w));
            out.push((format!("mlp.{i}.b"), &layer.b));
        }
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out: Vec<(String, &mut Tensor)> = vec![
            ("proj.w".into(), &mut self.proj.w),
            ("proj.b".into(), &mut self.proj.b),
            ("fuse.w".into(), &mut self.fuse_w),
            ("fuse.b".into(), &mut self.fuse_b),
        ];
        for (name, tensor) in self.gru.named_mut() {
            out.push((name.into(), tensor));
        }
        for (i, layer) in self.mlp.iter_mut().enumerate() {
            out.push((format!("mlp.{i}.w"), &mut layer.w));
            out.push((format!("mlp.{i}.b"), &mut layer.b));
        }
        out
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.named().iter().map(|(_, t)| t.numel()).collect()
    }

    pub fn n_params(&self) -> usize {
        self.param_sizes().iter().sum()
    }

    /// Concatenate all parameter values in `named()` order.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        for (_, tensor) in self.named() {
            flat.extend_from_slice(&tensor.values);
        }
        flat
    }

    /// Overwrite all parameter values from a flat vector in `named()` order.
    pub fn set_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.n_params()
            )));
        }
        let mut offset = 0;
        for (_, tensor) in self.named_mut() {
            let n = tensor.numel();
            tensor.values.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.all_finite())
    }

    fn push(&self, tape: &mut Tape) -> ParamVars {
        ParamVars {
            proj_w: tape.leaf_tensor(&self.proj.w),
            proj_b: tape.leaf_tensor(&self.proj.b),
            fuse_w: tape.leaf_tensor(&self.fuse_w),
            fuse_b: tape.leaf_tensor(&self.fuse_b),
            gru: self.gru.push(tape),
            mlp: self
                .mlp
                .iter()
                .map(|layer| (tape.leaf_tensor(&layer.w), tape.leaf_tensor(&layer.b)))
                .collect(),
        }
    }
}

struct ParamVars {
    proj_w: Var,
    proj_b: Var,
    fuse_w: Var,
    fuse_b: Var,
    gru: GruVars,
    mlp: Vec<(Var, Var)>,
}

impl ParamVars {
    /// Vars in the same order as `BiGgnnParams::named()`.
    fn ordered(&self) -> Vec<Var> {
        let mut out = vec![self.proj_w, self.proj_b, self.fuse_w, self.fuse_b];
        out.extend(self.gru.vars());
        for &(w, b) in &self.mlp {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// Neighbor lists of `graph` in the given direction, optionally weighted by
/// the corresponding edge weights.
pub fn neighbor_spec(
    graph: &DependencyGraph,
    direction: Direction,
    weighted: bool,
) -> NeighborSpec {
    let n = graph.node_count() as u32;
    let mut lists = Vec::with_capacity(n as usize);
    let mut weights = weighted.then(|| Vec::with_capacity(n as usize));
    for v in 0..n {
        let neighbors: Vec<u32> = match direction {
            Direction::Backward => graph.in_neighbors(v).to_vec(),
            Direction::Forward => graph.out_neighbors(v).to_vec(),
        };
        if let Some(weights) = &mut weights {
            let row: Vec<f64> = neighbors
                .iter()
                .map(|&u| match direction {
                    Direction::Backward => graph.weight(u, v).expect("listed edge"),
                    Direction::Forward => graph.weight(v, u).expect("listed edge"),
                })
                .collect();
            weights.push(row);
        }
        lists.push(neighbors);
    }
    NeighborSpec { lists, weights }
}

/// Unweighted sum of neighbor rows in the requested direction; nodes without
/// neighbors in that direction get zero rows.
pub fn aggregate_directional(
    graph: &DependencyGraph,
    h: &NodeFeatureMatrix,
    direction: Direction,
) -> Result<NodeFeatureMatrix> {
    if h.n_rows() != graph.node_count() {
        return Err(Error::Shape(format!(
            "{} feature rows over {} nodes",
            h.n_rows(),
            graph.node_count()
        )));
    }
    let spec = Rc::new(neighbor_spec(graph, direction, false));
    let mut tape = Tape::new();
    let input = tape.leaf(h.n_rows(), h.width(), h.values().to_vec(), false);
    let summed = tape.neighbor_sum(input, spec)?;
    let mut out = NodeFeatureMatrix::new(h.width());
    for row in tape.value(summed).chunks(h.width().max(1)) {
        out.push_row(row);
    }
    Ok(out)
}

fn fuse_on_tape(tape: &mut Tape, a: Var, b: Var, w_z: Var, b_z: Var) -> Result<Var> {
    let prod = tape.mul(a, b)?;
    let diff = tape.sub(a, b)?;
    let cat = tape.concat_cols(&[a, b, prod, diff])?;
    let gate_in = tape.matmul(cat, w_z)?;
    let gate_in = tape.add_row(gate_in, b_z)?;
    let z = tape.sigmoid(gate_in);
    let za = tape.mul(z, a)?;
    let keep = tape.one_minus(z);
    let zb = tape.mul(keep, b)?;
    tape.add(za, zb)
}

/// Gated sum of two aggregates: `z . a + (1 - z) . b` with
/// `z = sigmoid(Wz [a; b; a.b; a-b] + bz)`. `w_z` is `[4d, d]`, `b_z` `[1, d]`.
pub fn fuse(a: &Tensor, b: &Tensor, w_z: &Tensor, b_z: &Tensor) -> Result<Tensor> {
    let (ar, ac) = a.dims2();
    let (br, bc) = b.dims2();
    if (ar, ac) != (br, bc) {
        return Err(Error::Shape(format!("fuse: [{ar}, {ac}] vs [{br}, {bc}]")));
    }
    let mut tape = Tape::new();
    let av = tape.leaf(ar, ac, a.values.clone(), false);
    let bv = tape.leaf(br, bc, b.values.clone(), false);
    let wv = tape.leaf_tensor(w_z);
    let bzv = tape.leaf_tensor(b_z);
    let out = fuse_on_tape(&mut tape, av, bv, wv, bzv)?;
    let mut result = a.clone();
    result.requires_grad = false;
    result.grad = None;
    result.values = tape.value(out).to_vec();
    Ok(result)
}

/// Shared adjacency context for repeated forward passes over one graph.
pub struct ForwardContext {
    backward: Rc<NeighborSpec>,
    forward: Rc<NeighborSpec>,
    n_nodes: usize,
}

impl ForwardContext {
    pub fn new(graph: &DependencyGraph, weighted: bool) -> Self {
        Self {
            backward: Rc::new(neighbor_spec(graph, Direction::Backward, weighted)),
            forward: Rc::new(neighbor_spec(graph, Direction::Forward, weighted)),
            n_nodes: graph.node_count(),
        }
    }
}

fn check_finite(tape: &Tape, var: Var, hop: usize, what: &str) -> Result<()> {
    if tape.value(var).iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            hop,
            message: format!("non-finite {what}"),
        })
    }
}

/// Record the full forward pass on `tape` and return the probability Var.
fn probs_on_tape(
    tape: &mut Tape,
    ctx: &ForwardContext,
    features: Var,
    params: &ParamVars,
    hops: usize,
) -> Result<Var> {
    let projected = tape.matmul(features, params.proj_w)?;
    let mut state = tape.add_row(projected, params.proj_b)?;
    check_finite(tape, state, 0, "projection")?;
    for hop in 1..=hops {
        let back = tape.neighbor_sum(state, Rc::clone(&ctx.backward))?;
        let fwd = tape.neighbor_sum(state, Rc::clone(&ctx.forward))?;
        let fused = fuse_on_tape(tape, back, fwd, params.fuse_w, params.fuse_b)?;
        state = crate::nn::gru_cell_on_tape(tape, state, fused, &params.gru)?;
        check_finite(tape, state, hop, "node state")?;
    }
    let mut hidden = state;
    let last = params.mlp.len() - 1;
    for (i, &(w, b)) in params.mlp.iter().enumerate() {
        let lin = tape.matmul(hidden, w)?;
        let lin = tape.add_row(lin, b)?;
        hidden = if i < last { tape.tanh(lin) } else { lin };
    }
    let probs = tape.softmax(hidden);
    check_finite(tape, probs, hops + 1, "class probabilities")?;
    Ok(probs)
}

/// Per-node two-class probabilities `[n, 2]`, rows summing to one.
pub fn forward(
    graph: &DependencyGraph,
    features: &NodeFeatureMatrix,
    params: &BiGgnnParams,
    config: &ModelConfig,
) -> Result<Tensor> {
    let ctx = ForwardContext::new(graph, config.weighted_aggregation);
    forward_with_context(&ctx, features, params, config)
}

/// Like [`forward`] but reusing a prepared [`ForwardContext`].
pub fn forward_with_context(
    ctx: &ForwardContext,
    features: &NodeFeatureMatrix,
    params: &BiGgnnParams,
    config: &ModelConfig,
) -> Result<Tensor> {
    if features.n_rows() != ctx.n_nodes {
        return Err(Error::Shape(format!(
            "{} feature rows over {} nodes",
            features.n_rows(),
            ctx.n_nodes
        )));
    }
    if features.width() != params.input_dim() {
        return Err(Error::Shape(format!(
            "feature width {} vs input projection {}",
            features.width(),
            params.input_dim()
        )));
    }
    let mut tape = Tape::new();
    let x = tape.leaf(
        features.n_rows(),
        features.width(),
        features.values().to_vec(),
        false,
    );
    let vars = params.push(&mut tape);
    let probs = probs_on_tape(&mut tape, ctx, x, &vars, config.graph_hops)?;
    Tensor::matrix(features.n_rows(), 2, tape.value(probs).to_vec())
}

/// Loss tape for one batch: the tape, the loss Var and the parameter Vars in
/// `named()` order.
fn loss_tape(
    ctx: &ForwardContext,
    features: &NodeFeatureMatrix,
    labels: &[u8],
    mask: &[bool],
    params: &BiGgnnParams,
    hops: usize,
) -> Result<(Tape, Var, Vec<Var>)> {
    let mut tape = Tape::new();
    let x = tape.leaf(
        features.n_rows(),
        features.width(),
        features.values().to_vec(),
        false,
    );
    let vars = params.push(&mut tape);
    let probs = probs_on_tape(&mut tape, ctx, x, &vars, hops)?;
    let spec = Rc::new(crate::nn::CeSpec {
        labels: labels.to_vec(),
        mask: mask.to_vec(),
    });
    let loss = tape.cross_entropy(probs, spec)?;
    let ordered = vars.ordered();
    Ok((tape, loss, ordered))
}

/// Loss and parameter gradient at an arbitrary flat parameter vector, for
/// gradient checking the whole model.
pub struct ModelLoss<'a> {
    ctx: ForwardContext,
    features: &'a NodeFeatureMatrix,
    labels: &'a [u8],
    mask: Vec<bool>,
    template: BiGgnnParams,
    hops: usize,
}

impl<'a> ModelLoss<'a> {
    pub fn new(
        graph: &DependencyGraph,
        features: &'a NodeFeatureMatrix,
        labels: &'a [u8],
        mask: Vec<bool>,
        template: BiGgnnParams,
        config: &ModelConfig,
    ) -> Self {
        Self {
            ctx: ForwardContext::new(graph, config.weighted_aggregation),
            features,
            labels,
            mask,
            template,
            hops: config.graph_hops,
        }
    }
}

impl crate::nn::DiffLoss for ModelLoss<'_> {
    fn n_params(&self) -> usize {
        self.template.n_params()
    }

    fn loss(&mut self, params: &[f64]) -> Result<f64> {
        let mut model = self.template.clone();
        model.set_from_flat(params)?;
        let (tape, loss, _) = loss_tape(
            &self.ctx,
            self.features,
            self.labels,
            &self.mask,
            &model,
            self.hops,
        )?;
        Ok(tape.value(loss)[0])
    }

    fn loss_and_grad(&mut self, params: &[f64], grad_out: &mut [f64]) -> Result<f64> {
        let mut model = self.template.clone();
        model.set_from_flat(params)?;
        let (mut tape, loss, vars) = loss_tape(
            &self.ctx,
            self.features,
            self.labels,
            &self.mask,
            &model,
            self.hops,
        )?;
        tape.backward(loss)?;
        let mut offset = 0;
        for (&var, size) in vars.iter().zip(model.param_sizes()) {
            match tape.grad(var) {
                Some(grad) => grad_out[offset..offset + size].copy_from_slice(grad),
                None => grad_out[offset..offset + size].fill(0.0),
            }
            offset += size;
        }
        Ok(tape.value(loss)[0])
    }
}

/// Per-epoch training curve and the index of the snapshot that was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_metric: Vec<f64>,
    /// 1-based epoch whose parameters were returned; the argmax of
    /// `val_metric` with ties resolved to the earliest epoch.
    pub selected_epoch: usize,
}

/// Everything a protocol needs from one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: BiGgnnParams,
    pub history: TrainHistory,
    /// Defective-class probability per node of the augmented graph at the
    /// selected epoch; original nodes come first.
    pub probs: Vec<f64>,
    pub n_synthetic: usize,
}

/// Train on one graph. Oversampling (per `config.sampling_ratio`) runs once
/// before the first epoch; the returned parameters are the snapshot from the
/// epoch with the highest validation AUC.
pub fn train(
    graph: &DependencyGraph,
    features: &NodeFeatureMatrix,
    labels: &[u8],
    masks: &SplitMasks,
    config: &ModelConfig,
    rng: &mut impl Rng,
) -> Result<TrainOutcome> {
    config.validate()?;
    masks.validate(graph.node_count())?;
    if SplitMasks::count(&masks.train) == 0 {
        return Err(Error::Training("empty training mask".into()));
    }
    let classes = labels
        .iter()
        .zip(&masks.train)
        .fold([0usize; 2], |mut acc, (l, &t)| {
            if t {
                acc[*l as usize] += 1;
            }
            acc
        });
    if classes[0] == 0 || classes[1] == 0 {
        return Err(Error::Training(
            "training split contains a single class".into(),
        ));
    }

    let augmented: AugmentedDataset = match config.sampling_ratio {
        Some(ratio) => smote_augment(
            graph,
            features,
            labels,
            masks,
            &SamplingConfig { ratio },
            rng,
        )?,
        None => AugmentedDataset::passthrough(graph, features, labels, masks),
    };

    let ctx = ForwardContext::new(&augmented.graph, config.weighted_aggregation);
    let mut params = BiGgnnParams::init(features.width(), config, rng);
    let names: Vec<String> = params.named().into_iter().map(|(n, _)| n).collect();
    let mut adam = AdamState::new(
        AdamHyper::with_lr(config.learning_rate),
        &params.param_sizes(),
    );

    let mut train_nodes: Vec<usize> = SplitMasks::indices(&augmented.masks.train);
    let val_nodes: Vec<usize> = SplitMasks::indices(&augmented.masks.val);
    let n_aug = augmented.graph.node_count();

    let mut history = TrainHistory {
        train_loss: Vec::with_capacity(config.max_epochs),
        val_metric: Vec::with_capacity(config.max_epochs),
        selected_epoch: 0,
    };
    let mut best: Option<(f64, BiGgnnParams, Vec<f64>)> = None;

    for epoch in 1..=config.max_epochs {
        train_nodes.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut steps = 0usize;
        for batch in train_nodes.chunks(config.batch_size) {
            let mut mask = vec![false; n_aug];
            for &i in batch {
                mask[i] = true;
            }
            let (mut tape, loss, vars) = loss_tape(
                &ctx,
                &augmented.features,
                &augmented.labels,
                &mask,
                &params,
                config.graph_hops,
            )?;
            let loss_value = tape.value(loss)[0];
            if !loss_value.is_finite() {
                return Err(Error::Training(format!("non-finite loss at epoch {epoch}")));
            }
            tape.backward(loss)?;
            let grads: Vec<Vec<f64>> = vars
                .iter()
                .zip(params.param_sizes())
                .map(|(&var, size)| {
                    tape.grad(var)
                        .map(|g| g.to_vec())
                        .unwrap_or_else(|| vec![0.0; size])
                })
                .collect();
            let mut named = params.named_mut();
            let mut slots: Vec<(&str, &mut Tensor)> = named
                .iter_mut()
                .zip(&names)
                .map(|((_, tensor), name)| (name.as_str(), &mut **tensor))
                .collect();
            adam_step(&mut slots, &grads, &mut adam)?;
            loss_sum += loss_value;
            steps += 1;
        }

        let probs = forward_with_context(&ctx, &augmented.features, &params, config)?;
        let defective: Vec<f64> = (0..n_aug).map(|i| probs.values[i * 2 + 1]).collect();
        let val_scores: Vec<f64> = val_nodes.iter().map(|&i| defective[i]).collect();
        let val_labels: Vec<u8> = val_nodes.iter().map(|&i| augmented.labels[i]).collect();
        let val_auc = auc(&val_scores, &val_labels)?;

        history.train_loss.push(loss_sum / steps.max(1) as f64);
        history.val_metric.push(val_auc);
        let improved = best.as_ref().map_or(true, |(b, _, _)| val_auc > *b);
        if improved {
            best = Some((val_auc, params.clone(), defective));
            history.selected_epoch = epoch;
        }
    }

    let (_, best_params, best_probs) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        history,
        probs: best_probs,
        n_synthetic: augmented.synthetic_origin.len(),
    })
}

/// One sampled configuration and the score it achieved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrial {
    pub config: ModelConfig,
    pub score: f64,
}

/// Random search outcome: the winning configuration plus the full trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: SearchTrial,
    pub trials: Vec<SearchTrial>,
}

/// Sample `budget` configurations uniformly from `space` and keep the one
/// with the highest score; ties go to the earliest sampled.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    template: &ModelConfig,
    mut eval_fn: impl FnMut(&ModelConfig) -> Result<f64>,
    rng: &mut impl Rng,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let mut trials = Vec::with_capacity(budget);
    let mut best: Option<SearchTrial> = None;
    for _ in 0..budget {
        let config = space.sample(template, rng);
        let score = eval_fn(&config)?;
        let trial = SearchTrial { config, score };
        if best.as_ref().map_or(true, |b| trial.score > b.score) {
            best = Some(trial.clone());
        }
        trials.push(trial);
    }
    Ok(SearchResult {
        best: best.expect("budget >= 1"),
        trials,
    })
}
