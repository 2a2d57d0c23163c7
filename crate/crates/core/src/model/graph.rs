//! Minimal reverse-mode autodiff over row-major `f64` matrices.
//!
//! The network is small enough that a plain tape works: every operation
//! computes its value eagerly and records how to push gradients back.
//! Evaluation order is fixed, so results are bit-reproducible for a given
//! input regardless of thread count.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Tensor { rows, cols, data }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

pub type NodeId = usize;

enum Op {
    Leaf,
    /// Rows of `table` selected by `idx`.
    Gather { table: NodeId, idx: Vec<usize> },
    /// `a (r x k) * b (k x c)`.
    MatMul { a: NodeId, b: NodeId },
    /// `a (r x k) * b^T (c x k)`.
    MatMulT { a: NodeId, b: NodeId },
    /// Broadcast-add a `1 x c` row to every row of `a`.
    AddRow { a: NodeId, row: NodeId },
    Add { a: NodeId, b: NodeId },
    Scale { a: NodeId, k: f64 },
    Relu { a: NodeId },
    SoftmaxRows { a: NodeId },
    /// Per-row normalization with learned gain/shift; `mean`/`rstd` are the
    /// forward statistics, saved per row.
    LayerNorm {
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        mean: Vec<f64>,
        rstd: Vec<f64>,
    },
    SliceCols { a: NodeId, start: usize, len: usize },
    ConcatCols { parts: Vec<NodeId> },
    Reshape { a: NodeId },
    /// Multiply by a precomputed inverted-dropout mask.
    Dropout { a: NodeId, mask: Vec<f64> },
    /// Scalar: sum of element-wise binary cross-entropy of `sigmoid(logits)`
    /// against `targets`.
    BceSum { logits: NodeId, targets: Vec<f64> },
    /// Scalar: `sum_i coef_i * part_i` over `1 x 1` nodes.
    Combine { parts: Vec<(NodeId, f64)> },
}

struct Node {
    op: Op,
    value: Tensor,
}

/// A recorded computation. Build forward, then call [`Graph::backward`].
pub struct Graph {
    nodes: Vec<Node>,
}

const LN_EPS: f64 = 1e-5;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `bce(z, t) = max(z,0) - z*t + ln(1 + exp(-|z|))`.
fn bce(z: f64, t: f64) -> f64 {
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id].value.data[0]
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value)
    }

    pub fn gather(&mut self, table: NodeId, idx: Vec<usize>) -> NodeId {
        let t = &self.nodes[table].value;
        let mut value = Tensor::zeros(idx.len(), t.cols);
        for (r, &i) in idx.iter().enumerate() {
            value.row_mut(r).copy_from_slice(t.row(i));
        }
        self.push(Op::Gather { table, idx }, value)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a].value, &self.nodes[b].value);
        debug_assert_eq!(ta.cols, tb.rows);
        let mut value = Tensor::zeros(ta.rows, tb.cols);
        for r in 0..ta.rows {
            for k in 0..ta.cols {
                let lhs = ta.at(r, k);
                if lhs == 0.0 {
                    continue;
                }
                let brow = tb.row(k);
                let out = value.row_mut(r);
                for c in 0..tb.cols {
                    out[c] += lhs * brow[c];
                }
            }
        }
        self.push(Op::MatMul { a, b }, value)
    }

    pub fn matmul_t(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a].value, &self.nodes[b].value);
        debug_assert_eq!(ta.cols, tb.cols);
        let mut value = Tensor::zeros(ta.rows, tb.rows);
        for r in 0..ta.rows {
            let arow = ta.row(r);
            let out = value.row_mut(r);
            for c in 0..tb.rows {
                let brow = tb.row(c);
                let mut acc = 0.0;
                for k in 0..ta.cols {
                    acc += arow[k] * brow[k];
                }
                out[c] = acc;
            }
        }
        self.push(Op::MatMulT { a, b }, value)
    }

    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> NodeId {
        let (ta, trow) = (&self.nodes[a].value, &self.nodes[row].value);
        debug_assert_eq!(trow.rows, 1);
        debug_assert_eq!(ta.cols, trow.cols);
        let mut value = ta.clone();
        for r in 0..value.rows {
            for (v, b) in value.row_mut(r).iter_mut().zip(&trow.data) {
                *v += b;
            }
        }
        self.push(Op::AddRow { a, row }, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a].value, &self.nodes[b].value);
        debug_assert_eq!((ta.rows, ta.cols), (tb.rows, tb.cols));
        let mut value = ta.clone();
        for (v, w) in value.data.iter_mut().zip(&tb.data) {
            *v += w;
        }
        self.push(Op::Add { a, b }, value)
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for v in &mut value.data {
            *v *= k;
        }
        self.push(Op::Scale { a, k }, value)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for v in &mut value.data {
            *v = v.max(0.0);
        }
        self.push(Op::Relu { a }, value)
    }

    pub fn softmax_rows(&mut self, a: NodeId) -> NodeId {
        let mut value = self.nodes[a].value.clone();
        for r in 0..value.rows {
            let row = value.row_mut(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        self.push(Op::SoftmaxRows { a }, value)
    }

    pub fn layer_norm(&mut self, x: NodeId, gamma: NodeId, beta: NodeId) -> NodeId {
        let tx = &self.nodes[x].value;
        let (tg, tb) = (&self.nodes[gamma].value, &self.nodes[beta].value);
        debug_assert_eq!(tg.cols, tx.cols);
        let mut value = Tensor::zeros(tx.rows, tx.cols);
        let mut means = Vec::with_capacity(tx.rows);
        let mut rstds = Vec::with_capacity(tx.rows);
        let d = tx.cols as f64;
        for r in 0..tx.rows {
            let row = tx.row(r);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
            let rstd = 1.0 / (var + LN_EPS).sqrt();
            means.push(mean);
            rstds.push(rstd);
            let out = value.row_mut(r);
            for c in 0..row.len() {
                out[c] = (row[c] - mean) * rstd * tg.data[c] + tb.data[c];
            }
        }
        self.push(
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean: means,
                rstd: rstds,
            },
            value,
        )
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let ta = &self.nodes[a].value;
        debug_assert!(start + len <= ta.cols);
        let mut value = Tensor::zeros(ta.rows, len);
        for r in 0..ta.rows {
            value
                .row_mut(r)
                .copy_from_slice(&ta.row(r)[start..start + len]);
        }
        self.push(Op::SliceCols { a, start, len }, value)
    }

    pub fn concat_cols(&mut self, parts: Vec<NodeId>) -> NodeId {
        let rows = self.nodes[parts[0]].value.rows;
        let cols: usize = parts.iter().map(|&p| self.nodes[p].value.cols).sum();
        let mut value = Tensor::zeros(rows, cols);
        let mut offset = 0;
        for &p in &parts {
            let tp = &self.nodes[p].value;
            debug_assert_eq!(tp.rows, rows);
            for r in 0..rows {
                value.row_mut(r)[offset..offset + tp.cols].copy_from_slice(tp.row(r));
            }
            offset += tp.cols;
        }
        self.push(Op::ConcatCols { parts }, value)
    }

    /// Row-major reinterpretation; element count must match.
    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> NodeId {
        let ta = &self.nodes[a].value;
        debug_assert_eq!(ta.len(), rows * cols);
        let value = Tensor::from_rows(rows, cols, ta.data.clone());
        self.push(Op::Reshape { a }, value)
    }

    /// Inverted dropout: `mask` entries are `0` or `1/(1-p)`.
    pub fn dropout(&mut self, a: NodeId, mask: Vec<f64>) -> NodeId {
        let ta = &self.nodes[a].value;
        debug_assert_eq!(mask.len(), ta.len());
        let mut value = ta.clone();
        for (v, m) in value.data.iter_mut().zip(&mask) {
            *v *= m;
        }
        self.push(Op::Dropout { a, mask }, value)
    }

    /// Summed BCE of `sigmoid(logits)` against targets; scalar node.
    pub fn bce_sum(&mut self, logits: NodeId, targets: Vec<f64>) -> NodeId {
        let tl = &self.nodes[logits].value;
        debug_assert_eq!(tl.len(), targets.len());
        let sum = tl
            .data
            .iter()
            .zip(&targets)
            .map(|(&z, &t)| bce(z, t))
            .sum();
        self.push(
            Op::BceSum { logits, targets },
            Tensor::from_rows(1, 1, vec![sum]),
        )
    }

    /// Weighted sum of scalar nodes.
    pub fn combine(&mut self, parts: Vec<(NodeId, f64)>) -> NodeId {
        let sum = parts
            .iter()
            .map(|&(id, coef)| self.scalar(id) * coef)
            .sum();
        self.push(Op::Combine { parts }, Tensor::from_rows(1, 1, vec![sum]))
    }

    pub fn check_finite(&self, id: NodeId, context: &str) -> Result<()> {
        if self.nodes[id].value.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }

    /// Reverse pass from a scalar node; returns one gradient per node.
    pub fn backward(&self, loss: NodeId) -> Vec<Option<Tensor>> {
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss] = Some(Tensor::from_rows(1, 1, vec![1.0]));

        for id in (0..=loss).rev() {
            let Some(grad) = grads[id].take() else {
                continue;
            };
            match &self.nodes[id].op {
                Op::Leaf => {
                    grads[id] = Some(grad);
                    continue;
                }
                Op::Gather { table, idx } => {
                    let cols = grad.cols;
                    let acc = Self::entry(&mut grads, *table, &self.nodes[*table].value);
                    for (r, &i) in idx.iter().enumerate() {
                        for c in 0..cols {
                            acc.data[i * cols + c] += grad.at(r, c);
                        }
                    }
                }
                Op::MatMul { a, b } => {
                    let (ta, tb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    {
                        let ga = Self::entry(&mut grads, *a, ta);
                        for r in 0..ta.rows {
                            for k in 0..ta.cols {
                                let mut acc = 0.0;
                                for c in 0..tb.cols {
                                    acc += grad.at(r, c) * tb.at(k, c);
                                }
                                ga.data[r * ta.cols + k] += acc;
                            }
                        }
                    }
                    let gb = Self::entry(&mut grads, *b, tb);
                    for k in 0..tb.rows {
                        for c in 0..tb.cols {
                            let mut acc = 0.0;
                            for r in 0..ta.rows {
                                acc += ta.at(r, k) * grad.at(r, c);
                            }
                            gb.data[k * tb.cols + c] += acc;
                        }
                    }
                }
                Op::MatMulT { a, b } => {
                    // value = a * b^T
                    let (ta, tb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    {
                        let ga = Self::entry(&mut grads, *a, ta);
                        for r in 0..ta.rows {
                            for k in 0..ta.cols {
                                let mut acc = 0.0;
                                for c in 0..tb.rows {
                                    acc += grad.at(r, c) * tb.at(c, k);
                                }
                                ga.data[r * ta.cols + k] += acc;
                            }
                        }
                    }
                    let gb = Self::entry(&mut grads, *b, tb);
                    for c in 0..tb.rows {
                        for k in 0..tb.cols {
                            let mut acc = 0.0;
                            for r in 0..ta.rows {
                                acc += grad.at(r, c) * ta.at(r, k);
                            }
                            gb.data[c * tb.cols + k] += acc;
                        }
                    }
                }
                Op::AddRow { a, row } => {
                    {
                        let ga = Self::entry(&mut grads, *a, &self.nodes[*a].value);
                        for (g, d) in ga.data.iter_mut().zip(&grad.data) {
                            *g += d;
                        }
                    }
                    let grow = Self::entry(&mut grads, *row, &self.nodes[*row].value);
                    for r in 0..grad.rows {
                        for c in 0..grad.cols {
                            grow.data[c] += grad.at(r, c);
                        }
                    }
                }
                Op::Add { a, b } => {
                    for &side in &[*a, *b] {
                        let g = Self::entry(&mut grads, side, &self.nodes[side].value);
                        for (gv, dv) in g.data.iter_mut().zip(&grad.data) {
                            *gv += dv;
                        }
                    }
                }
                Op::Scale { a, k } => {
                    let ga = Self::entry(&mut grads, *a, &self.nodes[*a].value);
                    for (g, d) in ga.data.iter_mut().zip(&grad.data) {
                        *g += k * d;
                    }
                }
                Op::Relu { a } => {
                    let ta = &self.nodes[*a].value;
                    let ga = Self::entry(&mut grads, *a, ta);
                    for i in 0..ta.len() {
                        if ta.data[i] > 0.0 {
                            ga.data[i] += grad.data[i];
                        }
                    }
                }
                Op::SoftmaxRows { a } => {
                    let y = &self.nodes[id].value;
                    let ga = Self::entry(&mut grads, *a, &self.nodes[*a].value);
                    for r in 0..y.rows {
                        let yrow = y.row(r);
                        let drow = grad.row(r);
                        let dot: f64 = yrow.iter().zip(drow).map(|(y, d)| y * d).sum();
                        for c in 0..y.cols {
                            ga.data[r * y.cols + c] += yrow[c] * (drow[c] - dot);
                        }
                    }
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    mean,
                    rstd,
                } => {
                    let tx = &self.nodes[*x].value;
                    let tg = &self.nodes[*gamma].value;
                    let d = tx.cols as f64;
                    {
                        let gg = Self::entry(&mut grads, *gamma, tg);
                        for r in 0..tx.rows {
                            for c in 0..tx.cols {
                                let xhat = (tx.at(r, c) - mean[r]) * rstd[r];
                                gg.data[c] += grad.at(r, c) * xhat;
                            }
                        }
                    }
                    {
                        let gb = Self::entry(&mut grads, *beta, &self.nodes[*beta].value);
                        for r in 0..tx.rows {
                            for c in 0..tx.cols {
                                gb.data[c] += grad.at(r, c);
                            }
                        }
                    }
                    let gx = Self::entry(&mut grads, *x, tx);
                    for r in 0..tx.rows {
                        let mut mean_dy = 0.0;
                        let mut mean_dy_xhat = 0.0;
                        for c in 0..tx.cols {
                            let xhat = (tx.at(r, c) - mean[r]) * rstd[r];
                            let dy = grad.at(r, c) * tg.data[c];
                            mean_dy += dy;
                            mean_dy_xhat += dy * xhat;
                        }
                        mean_dy /= d;
                        mean_dy_xhat /= d;
                        for c in 0..tx.cols {
                            let xhat = (tx.at(r, c) - mean[r]) * rstd[r];
                            let dy = grad.at(r, c) * tg.data[c];
                            gx.data[r * tx.cols + c] +=
                                rstd[r] * (dy - mean_dy - xhat * mean_dy_xhat);
                        }
                    }
                }
                Op::SliceCols { a, start, len } => {
                    let ta = &self.nodes[*a].value;
                    let ga = Self::entry(&mut grads, *a, ta);
                    for r in 0..grad.rows {
                        for c in 0..*len {
                            ga.data[r * ta.cols + start + c] += grad.at(r, c);
                        }
                    }
                }
                Op::ConcatCols { parts } => {
                    let mut offset = 0;
                    for &p in parts {
                        let tp_cols = self.nodes[p].value.cols;
                        let gp = Self::entry(&mut grads, p, &self.nodes[p].value);
                        for r in 0..grad.rows {
                            for c in 0..tp_cols {
                                gp.data[r * tp_cols + c] += grad.at(r, offset + c);
                            }
                        }
                        offset += tp_cols;
                    }
                }
                Op::Reshape { a } => {
                    let ga = Self::entry(&mut grads, *a, &self.nodes[*a].value);
                    for (g, d) in ga.data.iter_mut().zip(&grad.data) {
                        *g += d;
                    }
                }
                Op::Dropout { a, mask } => {
                    let ga = Self::entry(&mut grads, *a, &self.nodes[*a].value);
                    for i in 0..mask.len() {
                        ga.data[i] += grad.data[i] * mask[i];
                    }
                }
                Op::BceSum { logits, targets } => {
                    let tl = &self.nodes[*logits].value;
                    let scale = grad.data[0];
                    let gl = Self::entry(&mut grads, *logits, tl);
                    for i in 0..targets.len() {
                        gl.data[i] += scale * (sigmoid(tl.data[i]) - targets[i]);
                    }
                }
                Op::Combine { parts } => {
                    let scale = grad.data[0];
                    for &(p, coef) in parts {
                        let gp = Self::entry(&mut grads, p, &self.nodes[p].value);
                        gp.data[0] += scale * coef;
                    }
                }
            }
        }
        grads
    }

    fn entry<'g>(
        grads: &'g mut [Option<Tensor>],
        id: NodeId,
        like: &Tensor,
    ) -> &'g mut Tensor {
        grads[id].get_or_insert_with(|| Tensor::zeros(like.rows, like.cols))
    }
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn randn(rng: &mut ChaCha12Rng, rows: usize, cols: usize) -> Tensor {
        Tensor::from_rows(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect(),
        )
    }

    /// Finite-difference check of a small graph exercising every op.
    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let table = randn(&mut rng, 6, 4);
        let weight = randn(&mut rng, 4, 4);
        let bias = randn(&mut rng, 1, 4);
        let keys = randn(&mut rng, 3, 4);
        let gamma = randn(&mut rng, 1, 4);
        let beta = randn(&mut rng, 1, 4);
        let mask = vec![
            1.25, 0.0, 1.25, 1.25, 0.0, 1.25, 1.25, 1.25, 0.0, 1.25, 1.25, 1.25,
        ];
        let targets = vec![1.0, 0.0, 1.0, 0.0];

        let build = |inputs: &[Tensor]| -> (Graph, Vec<NodeId>, NodeId) {
            let mut g = Graph::new();
            let leaves: Vec<NodeId> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
            let [table, weight, bias, keys, gamma, beta] = leaves[..] else {
                unreachable!()
            };
            let x = g.gather(table, vec![0, 2, 5]);
            let q = g.matmul(x, weight);
            let q = g.add_row(q, bias);
            let scores = g.matmul_t(q, keys);
            let scores = g.scale(scores, 0.5);
            let att = g.softmax_rows(scores);
            let mixed = g.matmul(att, keys);
            let res = g.add(mixed, x);
            let normed = g.layer_norm(res, gamma, beta);
            let act = g.relu(normed);
            let left = g.slice_cols(act, 0, 2);
            let right = g.slice_cols(act, 2, 2);
            let cat = g.concat_cols(vec![left, right]);
            let flat = g.reshape(cat, 1, 12);
            let dropped = g.dropout(flat, mask[..12].to_vec());
            let narrow = g.slice_cols(dropped, 3, 4);
            let loss_a = g.bce_sum(narrow, targets.clone());
            let loss = g.combine(vec![(loss_a, 0.5)]);
            (g, leaves, loss)
        };

        let inputs = vec![table, weight, bias, keys, gamma, beta];
        let (graph, leaves, loss) = build(&inputs);
        let grads = graph.backward(loss);

        let eps = 1e-5;
        for (which, input) in inputs.iter().enumerate() {
            let analytic = grads[leaves[which]].as_ref().expect("leaf gradient");
            for i in 0..input.len() {
                let mut plus = inputs.clone();
                plus[which].data[i] += eps;
                let mut minus = inputs.clone();
                minus[which].data[i] -= eps;
                let (gp, _, lp) = build(&plus);
                let (gm, _, lm) = build(&minus);
                let numeric = (gp.scalar(lp) - gm.scalar(lm)) / (2.0 * eps);
                let a = analytic.data[i];
                assert!(
                    (a - numeric).abs() <= 1e-6 + 1e-5 * a.abs().max(numeric.abs()),
                    "input {which} param {i}: analytic {a} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_rows(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0]));
        let y = g.softmax_rows(x);
        for r in 0..2 {
            let sum: f64 = (0..3).map(|c| g.value(y).at(r, c)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bce_matches_direct_formula() {
        let mut g = Graph::new();
        let z = g.leaf(Tensor::from_rows(1, 2, vec![2.0, -1.5]));
        let loss = g.bce_sum(z, vec![1.0, 0.0]);
        let expected = -(sigmoid(2.0)).ln() - (1.0 - sigmoid(-1.5)).ln();
        assert!((g.scalar(loss) - expected).abs() < 1e-12);
    }
}
