//! Objective, gradients, and the SGD training loop.
//!
//! The objective is mean binary cross-entropy over every head node of every
//! batch element. Gradient accumulation runs in fixed-size chunks that may
//! be evaluated in parallel; the final summation order is fixed, so training
//! is deterministic for a given seed.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TrainingExample;
use crate::error::{Error, Result};
use crate::model::graph::Tensor;
use crate::model::net::{ModelConfig, ModelParams, NetGraph};
use crate::model::tokens::detokenize;
use crate::rule_index::RuleIndexTable;
use crate::symbolic::{learn_minimal, targets_from_rules};

/// Gradients aligned with the parameter tensors.
#[derive(Debug, Clone)]
pub struct GradSet {
    tensors: Vec<Tensor>,
}

impl GradSet {
    fn zeros_like(params: &ModelParams) -> Self {
        Self {
            tensors: params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.rows, t.cols))
                .collect(),
        }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn get(&self, tensor: usize, offset: usize) -> f64 {
        self.tensors[tensor].data[offset]
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    fn add_assign(&mut self, other: &GradSet) {
        for (mine, theirs) in self.tensors.iter_mut().zip(&other.tensors) {
            for (m, t) in mine.data.iter_mut().zip(&theirs.data) {
                *m += t;
            }
        }
    }

    fn scale(&mut self, k: f64) {
        for tensor in &mut self.tensors {
            for v in &mut tensor.data {
                *v *= k;
            }
        }
    }
}

/// Examples per evaluation chunk. Constant so that the reduction tree, and
/// therefore the floating-point result, does not depend on thread count.
const CHUNK: usize = 8;

fn example_dropout_rng(base: u64, global_index: usize) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(
        base ^ (global_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    )
}

fn chunk_objective(
    params: &ModelParams,
    chunk: &[TrainingExample],
    chunk_start: usize,
    dropout_seed: Option<u64>,
) -> Result<(f64, GradSet)> {
    let n = params.n();
    let mut net = NetGraph::new(params);
    let mut example_losses = Vec::with_capacity(chunk.len());
    for (offset, example) in chunk.iter().enumerate() {
        if example.n != n {
            return Err(Error::WidthMismatch {
                left: example.n,
                right: n,
            });
        }
        let mut dropout_rng = dropout_seed.map(|s| example_dropout_rng(s, chunk_start + offset));
        let trunk = net.trunk(&example.tokens, dropout_rng.as_mut())?;
        let mut head_losses = Vec::with_capacity(n + 1);
        let mut total_nodes = 0usize;
        for l in 0..=n {
            let logits = net.head(trunk, l)?;
            let targets: Vec<f64> = example
                .targets
                .head(l)
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect();
            total_nodes += targets.len();
            head_losses.push(net.graph.bce_sum(logits, targets));
        }
        let weight = 1.0 / total_nodes as f64;
        let parts = head_losses.into_iter().map(|id| (id, weight)).collect();
        example_losses.push(net.graph.combine(parts));
    }
    let chunk_loss = net
        .graph
        .combine(example_losses.iter().map(|&id| (id, 1.0)).collect());
    net.graph.check_finite(chunk_loss, "loss")?;

    let node_grads = net.graph.backward(chunk_loss);
    let mut grads = GradSet::zeros_like(params);
    for (tensor_index, &leaf) in net.leaves.iter().enumerate() {
        if let Some(g) = &node_grads[leaf] {
            grads.tensors[tensor_index] = g.clone();
        }
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite {
            context: "gradient".into(),
        });
    }
    Ok((net.graph.scalar(chunk_loss), grads))
}

fn batch_objective(
    params: &ModelParams,
    batch: &[TrainingExample],
    dropout_seed: Option<u64>,
) -> Result<(f64, GradSet)> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let results: Vec<Result<(f64, GradSet)>> = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(i, chunk)| chunk_objective(params, chunk, i * CHUNK, dropout_seed))
        .collect();
    let mut total = GradSet::zeros_like(params);
    let mut loss_sum = 0.0;
    for result in results {
        let (loss, grads) = result?;
        loss_sum += loss;
        total.add_assign(&grads);
    }
    let scale = 1.0 / batch.len() as f64;
    total.scale(scale);
    Ok((loss_sum * scale, total))
}

/// Mean BCE over the batch and the gradient of every parameter. Dropout is
/// disabled here so the value is a pure function of parameters and batch;
/// the training loop applies dropout through its own seeded path.
pub fn loss_and_grads(
    params: &ModelParams,
    batch: &[TrainingExample],
) -> Result<(f64, GradSet)> {
    batch_objective(params, batch, None)
}

/// Forward-only mean BCE, for validation and final reporting.
pub fn batch_loss(params: &ModelParams, batch: &[TrainingExample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let n = params.n();
    let losses: Vec<Result<f64>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut net = NetGraph::new(params);
            let mut sum = 0.0;
            for example in chunk {
                let trunk = net.trunk(&example.tokens, None)?;
                let mut example_sum = 0.0;
                let mut total_nodes = 0usize;
                for l in 0..=n {
                    let logits = net.head(trunk, l)?;
                    let targets: Vec<f64> = example
                        .targets
                        .head(l)
                        .iter()
                        .map(|&b| if b { 1.0 } else { 0.0 })
                        .collect();
                    total_nodes += targets.len();
                    let id = net.graph.bce_sum(logits, targets);
                    example_sum += net.graph.scalar(id);
                }
                sum += example_sum / total_nodes as f64;
            }
            Ok(sum)
        })
        .collect();
    let mut total = 0.0;
    for loss in losses {
        total += loss?;
    }
    Ok(total / batch.len() as f64)
}

/// Training-run settings. Optimizer defaults follow the reference recipe
/// (plain SGD, lr 1e-4, weight decay 1e-4); tests and the CLI override the
/// schedule freely.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// 0.0 keeps plain SGD.
    pub momentum: f64,
    pub seed: u64,
    /// Fraction of the dataset held out for validation.
    pub val_fraction: f64,
    /// Randomly shrink half the examples each epoch, relabeling the
    /// remainder with the symbolic oracle, so the model also sees the
    /// partial inputs it will face at evaluation time.
    pub augment_partial: bool,
    /// Stop once the running epoch loss falls below this.
    pub stop_at_train_loss: Option<f64>,
}

impl TrainConfig {
    pub fn desk_default(n: usize) -> Self {
        Self {
            model: ModelConfig::desk_default(n),
            epochs: 100,
            batch_size: 32,
            lr: 1e-4,
            weight_decay: 1e-4,
            momentum: 0.0,
            seed: 0,
            val_fraction: 0.05,
            augment_partial: true,
            stop_at_train_loss: None,
        }
    }

    fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let complain = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 || self.batch_size == 0 {
            return complain("epochs and batch size must be positive".into());
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return complain(format!("bad learning rate {}", self.lr));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return complain(format!("bad weight decay {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return complain(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return complain(format!("validation fraction {} outside [0, 1)", self.val_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean batch objective seen during the epoch (dropout and augmentation
    /// included).
    pub train_loss: f64,
    /// Clean loss on the held-out split, when one exists.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: ModelParams,
    pub history: Vec<EpochStats>,
}

fn sgd_step(
    params: &mut ModelParams,
    grads: &GradSet,
    config: &TrainConfig,
    velocity: &mut Option<Vec<Tensor>>,
) {
    let tensors = params.tensors_mut();
    for (index, tensor) in tensors.iter_mut().enumerate() {
        let grad = &grads.tensors[index];
        match velocity {
            Some(velocity) => {
                let v = &mut velocity[index];
                for i in 0..tensor.data.len() {
                    let g = grad.data[i] + config.weight_decay * tensor.data[i];
                    v.data[i] = config.momentum * v.data[i] + g;
                    tensor.data[i] -= config.lr * v.data[i];
                }
            }
            None => {
                for i in 0..tensor.data.len() {
                    let g = grad.data[i] + config.weight_decay * tensor.data[i];
                    tensor.data[i] -= config.lr * g;
                }
            }
        }
    }
}

/// Replace a training example by a random non-empty strict subset of its
/// tokens, relabeled by the oracle over the remaining pairs.
fn augment_example(
    example: &TrainingExample,
    table: &RuleIndexTable,
    rng: &mut ChaCha12Rng,
) -> Result<TrainingExample> {
    let m = example.tokens.len();
    if m < 2 {
        return Ok(example.clone());
    }
    let drop = rng.gen_range(1..m);
    let mut order: Vec<usize> = (0..m).collect();
    for i in 0..drop {
        let j = rng.gen_range(i..m);
        order.swap(i, j);
    }
    let dropped: std::collections::BTreeSet<usize> = order[..drop].iter().copied().collect();
    let tokens: Vec<u32> = example
        .tokens
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, &t)| t)
        .collect();
    let labeled = detokenize(&tokens, example.n);
    let bodies = learn_minimal(&labeled)?;
    Ok(TrainingExample {
        n: example.n,
        tokens,
        targets: targets_from_rules(&bodies, table)?,
    })
}

/// Run SGD over the dataset. Deterministic for a given config: the split,
/// shuffling, dropout masks, and augmentation all derive from `config.seed`.
pub fn train(config: &TrainConfig, dataset: &[TrainingExample]) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training dataset"));
    }
    let n = config.model.n;
    if let Some(bad) = dataset.iter().find(|e| e.n != n) {
        return Err(Error::WidthMismatch {
            left: bad.n,
            right: n,
        });
    }
    let table = RuleIndexTable::new(n)?;

    let mut init_rng = ChaCha12Rng::seed_from_u64(config.seed);
    init_rng.set_stream(0);
    let mut params = ModelParams::init(config.model.clone(), init_rng.next_u64())?;

    let mut split_rng = ChaCha12Rng::seed_from_u64(config.seed);
    split_rng.set_stream(1);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    indices.shuffle(&mut split_rng);
    let val_count = (dataset.len() as f64 * config.val_fraction).floor() as usize;
    let (val_idx, train_idx) = indices.split_at(val_count);
    if train_idx.is_empty() {
        return Err(Error::InvalidConfig(
            "validation fraction leaves no training data".into(),
        ));
    }
    let val_set: Vec<TrainingExample> = val_idx.iter().map(|&i| dataset[i].clone()).collect();

    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(2);
    let mut aug_rng = ChaCha12Rng::seed_from_u64(config.seed);
    aug_rng.set_stream(3);
    let mut dropout_rng = ChaCha12Rng::seed_from_u64(config.seed);
    dropout_rng.set_stream(4);

    let mut velocity = (config.momentum > 0.0).then(|| {
        params
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.rows, t.cols))
            .collect::<Vec<_>>()
    });

    let mut history = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = train_idx.to_vec();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch_indices in order.chunks(config.batch_size) {
            let mut batch = Vec::with_capacity(batch_indices.len());
            for &i in batch_indices {
                let example = &dataset[i];
                if config.augment_partial && aug_rng.gen_bool(0.5) {
                    let sub_seed = aug_rng.next_u64();
                    let mut sub_rng = ChaCha12Rng::seed_from_u64(sub_seed);
                    batch.push(augment_example(example, &table, &mut sub_rng)?);
                } else {
                    batch.push(example.clone());
                }
            }
            let dropout_seed = (config.model.dropout > 0.0).then(|| dropout_rng.next_u64());
            let (loss, grads) = batch_objective(&params, &batch, dropout_seed)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            sgd_step(&mut params, &grads, config, &mut velocity);
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        let train_loss = loss_sum / seen as f64;
        if !train_loss.is_finite() || !params.all_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: train_loss,
            });
        }
        let val_loss = if val_set.is_empty() {
            None
        } else {
            Some(batch_loss(&params, &val_set)?)
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });
        if let Some(target) = config.stop_at_train_loss {
            if train_loss < target {
                break;
            }
        }
    }

    Ok(TrainReport { params, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_training_set, GenMode, GenOptions};

    fn tiny_model(n: usize) -> ModelConfig {
        ModelConfig {
            n,
            dim: 16,
            enc_blocks: 1,
            heads: 2,
            inducing: 4,
            pool_seeds: 1,
            ff_hidden: 32,
            ff_layers: 2,
            dropout: 0.0,
            layer_norm: true,
        }
    }

    fn n2_dataset() -> Vec<TrainingExample> {
        build_training_set(&GenOptions {
            mode: GenMode::ExhaustiveComplete,
            n: 2,
            count: 0,
            seed: 0,
            strong_canonical: false,
        })
        .unwrap()
    }

    #[test]
    fn loss_is_positive_and_grads_finite() {
        let params = ModelParams::init(tiny_model(2), 0).unwrap();
        let dataset = n2_dataset();
        let (loss, grads) = loss_and_grads(&params, &dataset[..4]).unwrap();
        assert!(loss > 0.0);
        assert!(grads.all_finite());
    }

    #[test]
    fn copies_of_one_example_average_to_the_single_gradient() {
        let params = ModelParams::init(tiny_model(2), 1).unwrap();
        let dataset = n2_dataset();
        let single = &dataset[3..4];
        let copies: Vec<TrainingExample> =
            std::iter::repeat(dataset[3].clone()).take(4).collect();
        let (l1, g1) = loss_and_grads(&params, single).unwrap();
        let (l4, g4) = loss_and_grads(&params, &copies).unwrap();
        assert!((l1 - l4).abs() < 1e-12);
        for (a, b) in g1.tensors().iter().zip(g4.tensors()) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    /// Outputs driven onto the targets push the loss to its floor and the
    /// gradients to zero.
    #[test]
    fn matched_targets_produce_near_zero_gradients() {
        let mut params = ModelParams::init(tiny_model(2), 2).unwrap();
        let dataset = n2_dataset();
        let example = dataset[5].clone();
        // zero head weights, then saturate each head bias toward its target
        params.zero_heads();
        let heads: Vec<(usize, usize)> = params.layout().heads.clone();
        for (l, &(_, bias)) in heads.iter().enumerate() {
            let targets: Vec<f64> = example
                .targets
                .head(l)
                .iter()
                .map(|&b| if b { 25.0 } else { -25.0 })
                .collect();
            params.tensors_mut()[bias].data.copy_from_slice(&targets);
        }
        let (loss, grads) = loss_and_grads(&params, &[example]).unwrap();
        assert!(loss < 1e-9, "loss {loss} above entropy floor");
        for tensor in grads.tensors() {
            for &g in &tensor.data {
                assert!(g.abs() < 1e-9, "gradient {g} not near zero");
            }
        }
    }

    #[test]
    fn lr_zero_leaves_parameters_unchanged() {
        let dataset = n2_dataset();
        let config = TrainConfig {
            model: tiny_model(2),
            epochs: 2,
            batch_size: 8,
            lr: 0.0,
            weight_decay: 1e-4,
            momentum: 0.0,
            seed: 7,
            val_fraction: 0.0,
            augment_partial: false,
            stop_at_train_loss: None,
        };
        let report = train(&config, &dataset).unwrap();
        let mut init_rng = ChaCha12Rng::seed_from_u64(7);
        init_rng.set_stream(0);
        let fresh = ModelParams::init(tiny_model(2), init_rng.next_u64()).unwrap();
        assert_eq!(report.params.tensors(), fresh.tensors());
    }

    #[test]
    fn same_seed_reproduces_parameters_exactly() {
        let dataset = n2_dataset();
        let config = TrainConfig {
            model: ModelConfig {
                dropout: 0.2,
                ..tiny_model(2)
            },
            epochs: 3,
            batch_size: 4,
            lr: 0.05,
            weight_decay: 1e-4,
            momentum: 0.0,
            seed: 123,
            val_fraction: 0.25,
            augment_partial: true,
            stop_at_train_loss: None,
        };
        let a = train(&config, &dataset).unwrap();
        let b = train(&config, &dataset).unwrap();
        assert_eq!(a.params.tensors(), b.params.tensors());
        assert_eq!(a.history, b.history);
        assert!(a.history.iter().all(|e| e.val_loss.is_some()));
    }

    #[test]
    fn training_reduces_loss() {
        let dataset = n2_dataset();
        let config = TrainConfig {
            model: tiny_model(2),
            epochs: 150,
            batch_size: 4,
            lr: 0.2,
            weight_decay: 0.0,
            momentum: 0.0,
            seed: 5,
            val_fraction: 0.0,
            augment_partial: false,
            stop_at_train_loss: None,
        };
        let report = train(&config, &dataset).unwrap();
        let initial = report.history.first().unwrap().train_loss;
        let last = batch_loss(&report.params, &dataset).unwrap();
        assert!(
            last < initial * 0.35,
            "loss did not drop: {initial} -> {last}"
        );
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let config = TrainConfig {
            model: tiny_model(2),
            epochs: 1,
            batch_size: 1,
            lr: 0.1,
            weight_decay: 0.0,
            momentum: 0.0,
            seed: 0,
            val_fraction: 0.0,
            augment_partial: false,
            stop_at_train_loss: None,
        };
        assert!(matches!(
            train(&config, &[]),
            Err(Error::EmptyInput("training dataset"))
        ));
    }
}
