//! Model definition: a set-attention trunk shared by per-body-length output
//! heads.
//!
//! Tokens are embedded, passed through induced set-attention blocks, pooled
//! by attention onto learned seed vectors, and pushed through a feed-forward
//! stack. Each body length `l` owns a final linear head of width
//! `body_count(n, l) + 1`; the extra node means "no rule of this length".
//! Nothing in the trunk depends on token order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::graph::{sigmoid, Graph, NodeId, Tensor};
use crate::model::tokens::TokenSet;
use crate::rule_index::body_count;

/// Architecture hyperparameters. The defaults are a desk-scale reduction of
/// the full-size configuration: learning-rate-class settings (dropout,
/// normalization) kept, dimensions shrunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Variable count the model is built for.
    pub n: usize,
    /// Trunk width.
    pub dim: usize,
    /// Encoder blocks (induced set attention).
    pub enc_blocks: usize,
    /// Attention heads per block.
    pub heads: usize,
    /// Inducing points per encoder block.
    pub inducing: usize,
    /// Learned pooling seeds.
    pub pool_seeds: usize,
    /// Feed-forward stack width.
    pub ff_hidden: usize,
    /// Feed-forward stack depth.
    pub ff_layers: usize,
    /// Dropout probability in the feed-forward stack (training only).
    pub dropout: f64,
    pub layer_norm: bool,
}

impl ModelConfig {
    pub fn desk_default(n: usize) -> Self {
        Self {
            n,
            dim: 64,
            enc_blocks: 2,
            heads: 4,
            inducing: 16,
            pool_seeds: 1,
            ff_hidden: 256,
            ff_layers: 2,
            dropout: 0.2,
            layer_norm: true,
        }
    }

    pub fn vocab(&self) -> usize {
        1 << (self.n + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let complain = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.n > 15 {
            return complain(format!("n = {} outside 1..=15", self.n));
        }
        if self.dim == 0 || self.heads == 0 || self.dim % self.heads != 0 {
            return complain(format!(
                "dim {} must be a positive multiple of heads {}",
                self.dim, self.heads
            ));
        }
        if self.enc_blocks == 0 || self.inducing == 0 || self.pool_seeds == 0 {
            return complain("encoder blocks, inducing points, and pool seeds must be positive".into());
        }
        if self.ff_hidden == 0 || self.ff_layers == 0 {
            return complain("feed-forward stack must be non-trivial".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return complain(format!("dropout {} outside [0, 1)", self.dropout));
        }
        Ok(())
    }
}

/// Parameter category, used to sample gradient checks per layer type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Embedding,
    AttnProj,
    AttnBias,
    LayerNorm,
    AttnFeedForward,
    Inducing,
    PoolSeed,
    FeedForward,
    Head,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct MabIdx {
    pub wq: usize,
    pub bq: usize,
    pub wk: usize,
    pub bk: usize,
    pub wv: usize,
    pub bv: usize,
    pub wo: usize,
    pub bo: usize,
    pub ln1g: usize,
    pub ln1b: usize,
    pub ln2g: usize,
    pub ln2b: usize,
    pub fw: usize,
    pub fb: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BlockIdx {
    pub inducing: usize,
    pub mab1: MabIdx,
    pub mab2: MabIdx,
}

/// Declared parameter order; checkpoints serialize tensors in this order.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub shapes: Vec<(LayerKind, usize, usize)>,
    pub embed: usize,
    pub blocks: Vec<BlockIdx>,
    pub dec_pre_w: usize,
    pub dec_pre_b: usize,
    pub dec_seeds: usize,
    pub dec_mab: MabIdx,
    pub ff: Vec<(usize, usize)>,
    pub heads: Vec<(usize, usize)>,
}

impl Layout {
    pub fn new(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let mut shapes = Vec::new();
        let mut declare = |kind: LayerKind, rows: usize, cols: usize| -> usize {
            shapes.push((kind, rows, cols));
            shapes.len() - 1
        };
        let mab = |declare: &mut dyn FnMut(LayerKind, usize, usize) -> usize| MabIdx {
            wq: declare(LayerKind::AttnProj, d, d),
            bq: declare(LayerKind::AttnBias, 1, d),
            wk: declare(LayerKind::AttnProj, d, d),
            bk: declare(LayerKind::AttnBias, 1, d),
            wv: declare(LayerKind::AttnProj, d, d),
            bv: declare(LayerKind::AttnBias, 1, d),
            wo: declare(LayerKind::AttnProj, d, d),
            bo: declare(LayerKind::AttnBias, 1, d),
            ln1g: declare(LayerKind::LayerNorm, 1, d),
            ln1b: declare(LayerKind::LayerNorm, 1, d),
            ln2g: declare(LayerKind::LayerNorm, 1, d),
            ln2b: declare(LayerKind::LayerNorm, 1, d),
            fw: declare(LayerKind::AttnFeedForward, d, d),
            fb: declare(LayerKind::AttnFeedForward, 1, d),
        };

        let embed = declare(LayerKind::Embedding, config.vocab(), d);
        let blocks = (0..config.enc_blocks)
            .map(|_| BlockIdx {
                inducing: declare(LayerKind::Inducing, config.inducing, d),
                mab1: mab(&mut declare),
                mab2: mab(&mut declare),
            })
            .collect();
        let dec_pre_w = declare(LayerKind::AttnFeedForward, d, d);
        let dec_pre_b = declare(LayerKind::AttnFeedForward, 1, d);
        let dec_seeds = declare(LayerKind::PoolSeed, config.pool_seeds, d);
        let dec_mab = mab(&mut declare);

        let mut ff = Vec::new();
        let mut width = config.pool_seeds * d;
        for _ in 0..config.ff_layers {
            ff.push((
                declare(LayerKind::FeedForward, width, config.ff_hidden),
                declare(LayerKind::FeedForward, 1, config.ff_hidden),
            ));
            width = config.ff_hidden;
        }

        let mut heads = Vec::new();
        for l in 0..=config.n {
            let out = body_count(config.n, l)? as usize + 1;
            heads.push((
                declare(LayerKind::Head, width, out),
                declare(LayerKind::Head, 1, out),
            ));
        }

        Ok(Self {
            shapes,
            embed,
            blocks,
            dec_pre_w,
            dec_pre_b,
            dec_seeds,
            dec_mab,
            ff,
            heads,
        })
    }
}

/// Trained (or freshly initialized) weights together with their architecture.
#[derive(Debug, Clone)]
pub struct ModelParams {
    config: ModelConfig,
    layout: Layout,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    /// Seeded initialization: uniform Xavier for projections, zeros for
    /// biases, ones/zeros for normalization gains/shifts.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let layout = Layout::new(&config)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut tensors: Vec<Tensor> = layout
            .shapes
            .iter()
            .map(|&(kind, rows, cols)| init_tensor(kind, rows, cols, &mut rng))
            .collect();
        // normalization shifts start at zero, gains at one
        let mabs: Vec<MabIdx> = layout
            .blocks
            .iter()
            .flat_map(|b| [b.mab1, b.mab2])
            .chain([layout.dec_mab])
            .collect();
        for mab in mabs {
            for shift in [mab.ln1b, mab.ln2b] {
                tensors[shift].data.fill(0.0);
            }
        }
        Ok(Self {
            config,
            layout,
            tensors,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    pub(crate) fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub(crate) fn from_parts(config: ModelConfig, tensors: Vec<Tensor>) -> Result<Self> {
        let layout = Layout::new(&config)?;
        if tensors.len() != layout.shapes.len() {
            return Err(Error::CorruptRecord {
                kind: "checkpoint",
                detail: format!(
                    "expected {} tensors, found {}",
                    layout.shapes.len(),
                    tensors.len()
                ),
            });
        }
        for (tensor, &(_, rows, cols)) in tensors.iter().zip(&layout.shapes) {
            if tensor.rows != rows || tensor.cols != cols {
                return Err(Error::CorruptRecord {
                    kind: "checkpoint",
                    detail: "tensor shape mismatch".into(),
                });
            }
            if !tensor.is_finite() {
                return Err(Error::NonFinite {
                    context: "checkpoint tensor".into(),
                });
            }
        }
        Ok(Self {
            config,
            layout,
            tensors,
        })
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Category of each tensor, aligned with the internal order.
    pub fn layer_kinds(&self) -> Vec<LayerKind> {
        self.layout.shapes.iter().map(|&(kind, _, _)| kind).collect()
    }

    pub fn tensor_len(&self, index: usize) -> usize {
        self.tensors[index].len()
    }

    pub fn get_param(&self, tensor: usize, offset: usize) -> f64 {
        self.tensors[tensor].data[offset]
    }

    pub fn set_param(&mut self, tensor: usize, offset: usize, value: f64) {
        self.tensors[tensor].data[offset] = value;
    }

    /// Output width of the length-`l` head, no-rule node included.
    pub fn head_width(&self, l: usize) -> usize {
        let (w, _) = self.layout.heads[l];
        self.layout.shapes[w].2
    }

    /// Zero every head tensor; the trunk is untouched. All head outputs
    /// become exactly 0.5 after the sigmoid.
    pub fn zero_heads(&mut self) {
        for &(w, b) in &self.layout.heads.clone() {
            for v in &mut self.tensors[w].data {
                *v = 0.0;
            }
            for v in &mut self.tensors[b].data {
                *v = 0.0;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }
}

fn init_tensor(kind: LayerKind, rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Tensor {
    let xavier = |rng: &mut ChaCha12Rng, fan_in: usize, fan_out: usize, len: usize| {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
    };
    let data = match kind {
        LayerKind::Embedding | LayerKind::Inducing | LayerKind::PoolSeed => {
            let std = 1.0 / (cols as f64).sqrt();
            (0..rows * cols).map(|_| rng.gen_range(-std..std)).collect()
        }
        LayerKind::AttnProj | LayerKind::AttnFeedForward | LayerKind::FeedForward
        | LayerKind::Head => {
            if rows == 1 {
                vec![0.0; cols] // bias rows
            } else {
                xavier(rng, rows, cols, rows * cols)
            }
        }
        LayerKind::AttnBias => vec![0.0; cols],
        LayerKind::LayerNorm => vec![1.0; cols], // gains; shifts fixed below
    };
    Tensor::from_rows(rows, cols, data)
}

/// Sigmoid activations of one head; the final entry is the no-rule node.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub l: usize,
    pub probs: Vec<f64>,
}

impl HeadOutput {
    pub fn no_rule(&self) -> f64 {
        *self.probs.last().expect("head width >= 1")
    }

    pub fn rule_probs(&self) -> &[f64] {
        &self.probs[..self.probs.len() - 1]
    }
}

/// Graph under construction for one parameter snapshot. Parameters enter the
/// graph once as leaves; examples append their own forward nodes.
pub(crate) struct NetGraph<'p> {
    pub graph: Graph,
    pub leaves: Vec<NodeId>,
    params: &'p ModelParams,
}

impl<'p> NetGraph<'p> {
    pub fn new(params: &'p ModelParams) -> Self {
        let mut graph = Graph::new();
        let leaves = params
            .tensors
            .iter()
            .map(|tensor| graph.leaf(tensor.clone()))
            .collect();
        Self {
            graph,
            leaves,
            params,
        }
    }

    fn linear(&mut self, x: NodeId, w: usize, b: usize) -> NodeId {
        let wx = self.graph.matmul(x, self.leaves[w]);
        self.graph.add_row(wx, self.leaves[b])
    }

    fn maybe_norm(&mut self, x: NodeId, gamma: usize, beta: usize) -> NodeId {
        if self.params.config.layer_norm {
            self.graph
                .layer_norm(x, self.leaves[gamma], self.leaves[beta])
        } else {
            x
        }
    }

    /// `MAB(x, y)`: multi-head attention of `x` over `y` with residuals,
    /// optional normalization, and a row-wise feed-forward.
    fn mab(&mut self, x: NodeId, y: NodeId, idx: &MabIdx) -> NodeId {
        let config = self.params.config();
        let per_head = config.dim / config.heads;
        let q = self.linear(x, idx.wq, idx.bq);
        let k = self.linear(y, idx.wk, idx.bk);
        let v = self.linear(y, idx.wv, idx.bv);
        let mut mixed = Vec::with_capacity(config.heads);
        for h in 0..config.heads {
            let qh = self.graph.slice_cols(q, h * per_head, per_head);
            let kh = self.graph.slice_cols(k, h * per_head, per_head);
            let vh = self.graph.slice_cols(v, h * per_head, per_head);
            let scores = self.graph.matmul_t(qh, kh);
            let scores = self.graph.scale(scores, 1.0 / (per_head as f64).sqrt());
            let att = self.graph.softmax_rows(scores);
            mixed.push(self.graph.matmul(att, vh));
        }
        let mixed = self.graph.concat_cols(mixed);
        let mixed = self.linear(mixed, idx.wo, idx.bo);
        let res = self.graph.add(x, mixed);
        let h = self.maybe_norm(res, idx.ln1g, idx.ln1b);
        let ff = self.linear(h, idx.fw, idx.fb);
        let ff = self.graph.relu(ff);
        let out = self.graph.add(h, ff);
        self.maybe_norm(out, idx.ln2g, idx.ln2b)
    }

    /// Shared trunk: embedding, encoder blocks, attention pooling, and the
    /// feed-forward stack. `dropout` carries the per-example mask source in
    /// training mode; `None` means inference.
    pub fn trunk(
        &mut self,
        token_ids: &[u32],
        mut dropout: Option<&mut ChaCha12Rng>,
    ) -> Result<NodeId> {
        let config = self.params.config().clone();
        let vocab = config.vocab() as u32;
        if token_ids.is_empty() {
            return Err(Error::EmptyInput("token set"));
        }
        if let Some(&bad) = token_ids.iter().find(|&&id| id >= vocab) {
            return Err(Error::CorruptRecord {
                kind: "token set",
                detail: format!("token id {bad} outside vocabulary of {vocab}"),
            });
        }
        let idx: Vec<usize> = token_ids.iter().map(|&id| id as usize).collect();
        let layout = self.params.layout().clone();

        let mut x = self.graph.gather(self.leaves[layout.embed], idx);
        for block in &layout.blocks {
            let inducing = self.leaves[block.inducing];
            let summarized = self.mab(inducing, x, &block.mab1);
            x = self.mab(x, summarized, &block.mab2);
        }

        let pre = self.linear(x, layout.dec_pre_w, layout.dec_pre_b);
        let pre = self.graph.relu(pre);
        let seeds = self.leaves[layout.dec_seeds];
        let pooled = self.mab(seeds, pre, &layout.dec_mab);
        let mut t = self
            .graph
            .reshape(pooled, 1, config.pool_seeds * config.dim);

        for &(w, b) in &layout.ff {
            t = self.linear(t, w, b);
            t = self.graph.relu(t);
            if let Some(rng) = dropout.as_deref_mut() {
                if config.dropout > 0.0 {
                    let keep = 1.0 - config.dropout;
                    let mask = (0..config.ff_hidden)
                        .map(|_| {
                            if rng.gen_range(0.0..1.0) < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    t = self.graph.dropout(t, mask);
                }
            }
        }
        Ok(t)
    }

    /// Logits of the length-`l` head on a trunk output.
    pub fn head(&mut self, trunk: NodeId, l: usize) -> Result<NodeId> {
        let layout = self.params.layout();
        if l >= layout.heads.len() {
            return Err(Error::BodyLengthTooLarge {
                len: l,
                n: self.params.config.n,
            });
        }
        let (w, b) = layout.heads[l];
        Ok(self.linear(trunk, w, b))
    }
}

/// Inference for one body length. Dropout is disabled; the result depends
/// only on the parameters and the token multiset.
pub fn forward(params: &ModelParams, tokens: &TokenSet, l: usize) -> Result<HeadOutput> {
    let mut outputs = forward_heads(params, tokens, &[l])?;
    Ok(outputs.remove(0))
}

/// Inference across every head, sharing one trunk evaluation.
pub fn forward_all(params: &ModelParams, tokens: &TokenSet) -> Result<Vec<HeadOutput>> {
    let lengths: Vec<usize> = (0..=params.config.n).collect();
    forward_heads(params, tokens, &lengths)
}

fn forward_heads(
    params: &ModelParams,
    tokens: &TokenSet,
    lengths: &[usize],
) -> Result<Vec<HeadOutput>> {
    let mut net = NetGraph::new(params);
    let trunk = net.trunk(tokens.ids(), None)?;
    let mut outputs = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let logits = net.head(trunk, l)?;
        net.graph.check_finite(logits, "model forward")?;
        let probs = net
            .graph
            .value(logits)
            .data
            .iter()
            .map(|&z| sigmoid(z))
            .collect();
        outputs.push(HeadOutput { l, probs });
    }
    Ok(outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ModelConfig {
        ModelConfig {
            n: 3,
            dim: 16,
            enc_blocks: 1,
            heads: 2,
            inducing: 4,
            pool_seeds: 1,
            ff_hidden: 32,
            ff_layers: 2,
            dropout: 0.2,
            layer_norm: true,
        }
    }

    #[test]
    fn head_widths_match_body_counts() {
        let params = ModelParams::init(tiny_config(), 0).unwrap();
        assert_eq!(params.head_width(0), 2);
        assert_eq!(params.head_width(1), 7);
        assert_eq!(params.head_width(2), 13);
        assert_eq!(params.head_width(3), 9);
        assert!(params.all_finite());
    }

    #[test]
    fn forward_is_order_invariant() {
        let params = ModelParams::init(tiny_config(), 3).unwrap();
        let sorted = TokenSet::new(vec![0, 3, 5, 9, 14]).unwrap();
        let shuffled = TokenSet::new(vec![9, 0, 14, 5, 3]).unwrap();
        for l in 0..=3 {
            let a = forward(&params, &sorted, l).unwrap();
            let b = forward(&params, &shuffled, l).unwrap();
            for (x, y) in a.probs.iter().zip(&b.probs) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zeroed_heads_output_half() {
        let mut params = ModelParams::init(tiny_config(), 1).unwrap();
        params.zero_heads();
        let tokens = TokenSet::new(vec![2, 7]).unwrap();
        for l in 0..=3 {
            let out = forward(&params, &tokens, l).unwrap();
            assert!(out.probs.iter().all(|&p| p == 0.5));
        }
    }

    #[test]
    fn out_of_range_inputs_are_rejected() {
        let params = ModelParams::init(tiny_config(), 0).unwrap();
        let tokens = TokenSet::new(vec![1]).unwrap();
        assert!(forward(&params, &tokens, 4).is_err());
        let wide = TokenSet::new(vec![16]).unwrap();
        assert!(forward(&params, &wide, 0).is_err());
    }

    #[test]
    fn same_seed_same_init() {
        let a = ModelParams::init(tiny_config(), 9).unwrap();
        let b = ModelParams::init(tiny_config(), 9).unwrap();
        assert_eq!(a.tensors(), b.tensors());
    }
}
