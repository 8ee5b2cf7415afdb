//! Reverse-mode differentiation over batched matrix values.
//!
//! Every node holds a rows×cols value (a batch of row vectors). The op set is
//! exactly what the critic objective, the generator loss, and the R1 penalty
//! need — nothing more. Backward walks the node list in reverse and
//! accumulates adjoints in a fixed order, so gradients are bit-reproducible.

use crate::linalg::{matmul_nn_acc, matmul_tn_acc};
use crate::srvt::{signed_sqrt, smoothed_signed_sqrt, smoothed_slope};

pub type NodeId = usize;

/// Floor applied under fractional powers/roots before differentiating (and,
/// for the final root, before evaluating), keeping gradients finite when a
/// critic annihilates a batch.
pub const POWER_FLOOR: f64 = 1e-24;

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    /// a (r×k) · w (c×k)ᵀ → r×c. The dense-layer forward.
    MatMulNT { a: NodeId, w: NodeId },
    /// a (r×k) · b (k×c) → r×c. Used by the R1 gradient construction.
    MatMulNN { a: NodeId, b: NodeId },
    /// Broadcast a 1×c bias over the rows of a (r×c).
    AddRow { a: NodeId, bias: NodeId },
    LeakyRelu { a: NodeId, slope: f64 },
    Scale { a: NodeId, factor: f64 },
    /// Elementwise product with a constant matrix (activation masks in the
    /// R1 path; the constant does not participate in differentiation).
    MulMask { a: NodeId, mask: Vec<f64> },
    /// Row-wise square-root velocity transform. Forward is exact; backward
    /// uses the smoothed slope 1/(2·sqrt(|Δ|+eps)).
    Srvt { a: NodeId, eps: f64 },
    /// Row-wise multiplication by Jᵀ where J is the SRVT Jacobian captured
    /// as constant slopes (R1 path).
    SrvtT { w: NodeId, slopes: Vec<f64> },
    /// (r×c) → (r×1): sum of squares of each row.
    RowSumSq { a: NodeId },
    /// Elementwise x^e on nonnegative inputs. Forward exact; backward floors
    /// the base at POWER_FLOOR when e < 1 so the slope stays finite.
    Pow { a: NodeId, exponent: f64 },
    /// (r×1) → 1×1: Σ w_i · a_i, weights constant.
    WeightedMean { a: NodeId, weights: Vec<f64> },
    /// 1×1 scalar: max(x, POWER_FLOOR)^(1/p).
    Root { a: NodeId, p: f64 },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
}

struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    requires_grad: bool,
}

pub struct Tape {
    nodes: Vec<Node>,
    /// When set, the SRVT op evaluates the smoothed surrogate forward instead
    /// of the exact transform, making the whole tape C¹ so finite differences
    /// can validate the analytic backward. Never set outside gradient checks.
    pub smooth_srvt_forward: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            smooth_srvt_forward: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        (self.nodes[id].rows, self.nodes[id].cols)
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id].value.len(), 1);
        self.nodes[id].value[0]
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>, rg: bool) -> NodeId {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            op,
            rows,
            cols,
            value,
            requires_grad: rg,
        });
        self.nodes.len() - 1
    }

    fn rg(&self, id: NodeId) -> bool {
        self.nodes[id].requires_grad
    }

    pub fn leaf(&mut self, rows: usize, cols: usize, value: Vec<f64>, requires_grad: bool) -> NodeId {
        self.push(Op::Leaf, rows, cols, value, requires_grad)
    }

    pub fn matmul_nt(&mut self, a: NodeId, w: NodeId) -> NodeId {
        let (r, k) = self.shape(a);
        let (c, k2) = self.shape(w);
        assert_eq!(k, k2, "matmul_nt inner dimensions differ");
        // Materialize wᵀ so the product runs through the vectorizable kernel.
        let mut wt = vec![0.0; k * c];
        let wv = &self.nodes[w].value;
        for i in 0..c {
            for j in 0..k {
                wt[j * c + i] = wv[i * k + j];
            }
        }
        let mut out = vec![0.0; r * c];
        matmul_nn_acc(&self.nodes[a].value, r, k, &wt, c, &mut out);
        let rg = self.rg(a) || self.rg(w);
        self.push(Op::MatMulNT { a, w }, r, c, out, rg)
    }

    pub fn matmul_nn(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (r, k) = self.shape(a);
        let (k2, c) = self.shape(b);
        assert_eq!(k, k2, "matmul_nn inner dimensions differ");
        let mut out = vec![0.0; r * c];
        matmul_nn_acc(&self.nodes[a].value, r, k, &self.nodes[b].value, c, &mut out);
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::MatMulNN { a, b }, r, c, out, rg)
    }

    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let (r, c) = self.shape(a);
        let (br, bc) = self.shape(bias);
        assert!(br == 1 && bc == c, "bias must be 1×cols");
        let mut out = self.nodes[a].value.clone();
        let bv = self.nodes[bias].value.clone();
        for row in out.chunks_exact_mut(c) {
            for j in 0..c {
                row[j] += bv[j];
            }
        }
        let rg = self.rg(a) || self.rg(bias);
        self.push(Op::AddRow { a, bias }, r, c, out, rg)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .map(|&x| if x >= 0.0 { x } else { slope * x })
            .collect();
        let rg = self.rg(a);
        self.push(Op::LeakyRelu { a, slope }, r, c, out, rg)
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a].value.iter().map(|&x| factor * x).collect();
        let rg = self.rg(a);
        self.push(Op::Scale { a, factor }, r, c, out, rg)
    }

    pub fn mul_mask(&mut self, a: NodeId, mask: Vec<f64>) -> NodeId {
        let (r, c) = self.shape(a);
        assert_eq!(mask.len(), r * c);
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .zip(&mask)
            .map(|(&x, &m)| x * m)
            .collect();
        let rg = self.rg(a);
        self.push(Op::MulMask { a, mask }, r, c, out, rg)
    }

    pub fn srvt(&mut self, a: NodeId, eps: f64) -> NodeId {
        let (r, c) = self.shape(a);
        let smooth = self.smooth_srvt_forward;
        let mut out = vec![0.0; r * c];
        for (row_in, row_out) in self.nodes[a]
            .value
            .chunks_exact(c)
            .zip(out.chunks_exact_mut(c))
        {
            let mut prev = 0.0;
            for j in 0..c {
                let d = row_in[j] - prev;
                prev = row_in[j];
                row_out[j] = if smooth {
                    smoothed_signed_sqrt(d, eps)
                } else {
                    signed_sqrt(d)
                };
            }
        }
        let rg = self.rg(a);
        self.push(Op::Srvt { a, eps }, r, c, out, rg)
    }

    /// Row-wise (Jᵀ w) where J is an SRVT Jacobian with the given constant
    /// slopes (same shape as w): out_j = s_j·w_j − s_{j+1}·w_{j+1}.
    pub fn srvt_t(&mut self, w: NodeId, slopes: Vec<f64>) -> NodeId {
        let (r, c) = self.shape(w);
        assert_eq!(slopes.len(), r * c);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            let wr = &self.nodes[w].value[i * c..(i + 1) * c];
            let sr = &slopes[i * c..(i + 1) * c];
            let or = &mut out[i * c..(i + 1) * c];
            for j in 0..c {
                let next = if j + 1 < c { sr[j + 1] * wr[j + 1] } else { 0.0 };
                or[j] = sr[j] * wr[j] - next;
            }
        }
        let rg = self.rg(w);
        self.push(Op::SrvtT { w, slopes }, r, c, out, rg)
    }

    pub fn row_sumsq(&mut self, a: NodeId) -> NodeId {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a]
            .value
            .chunks_exact(c)
            .map(|row| {
                let mut s = 0.0;
                for &x in row {
                    s += x * x;
                }
                s
            })
            .collect();
        let rg = self.rg(a);
        self.push(Op::RowSumSq { a }, r, 1, out, rg)
    }

    pub fn pow(&mut self, a: NodeId, exponent: f64) -> NodeId {
        let (r, c) = self.shape(a);
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .map(|&x| x.powf(exponent))
            .collect();
        let rg = self.rg(a);
        self.push(Op::Pow { a, exponent }, r, c, out, rg)
    }

    pub fn weighted_mean(&mut self, a: NodeId, weights: Vec<f64>) -> NodeId {
        let (r, c) = self.shape(a);
        assert_eq!(c, 1, "weighted_mean expects a column");
        assert_eq!(weights.len(), r);
        let mut s = 0.0;
        for i in 0..r {
            s += weights[i] * self.nodes[a].value[i];
        }
        let rg = self.rg(a);
        self.push(Op::WeightedMean { a, weights }, 1, 1, vec![s], rg)
    }

    pub fn root(&mut self, a: NodeId, p: f64) -> NodeId {
        assert_eq!(self.shape(a), (1, 1), "root expects a scalar");
        let x = self.nodes[a].value[0];
        let out = x.max(POWER_FLOOR).powf(1.0 / p);
        let rg = self.rg(a);
        self.push(Op::Root { a, p }, 1, 1, vec![out], rg)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(b), (r, c));
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(&x, &y)| x + y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::Add { a, b }, r, c, out, rg)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (r, c) = self.shape(a);
        assert_eq!(self.shape(b), (r, c));
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(&x, &y)| x - y)
            .collect();
        let rg = self.rg(a) || self.rg(b);
        self.push(Op::Sub { a, b }, r, c, out, rg)
    }

    /// Reverse pass from a scalar output; returns one adjoint buffer per node
    /// (None for nodes that do not require gradients).
    pub fn backward(&self, output: NodeId) -> Gradients {
        assert_eq!(
            self.shape(output),
            (1, 1),
            "backward requires a scalar output"
        );
        let mut adj: Vec<Option<Vec<f64>>> = self
            .nodes
            .iter()
            .map(|n| {
                if n.requires_grad {
                    Some(vec![0.0; n.value.len()])
                } else {
                    None
                }
            })
            .collect();
        if adj[output].is_none() {
            // Output does not depend on any differentiable leaf.
            return Gradients { adj };
        }
        adj[output].as_mut().unwrap()[0] = 1.0;

        for id in (0..=output).rev() {
            if adj[id].is_none() {
                continue;
            }
            // Take the adjoint out to satisfy the borrow checker; it is
            // final for this node because all consumers come later.
            let d = adj[id].take().unwrap();
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {
                    adj[id] = Some(d);
                    continue;
                }
                Op::MatMulNT { a, w } => {
                    let (r, k) = self.shape(*a);
                    let c = node.cols;
                    if let Some(da) = adj[*a].as_mut() {
                        // dA += dOut (r×c) · W (c×k)
                        matmul_nn_acc(&d, r, c, &self.nodes[*w].value, k, da);
                    }
                    if let Some(dw) = adj[*w].as_mut() {
                        // dW += dOutᵀ (c×r) · A (r×k)
                        matmul_tn_acc(&d, r, c, &self.nodes[*a].value, k, dw);
                    }
                }
                Op::MatMulNN { a, b } => {
                    let (r, k) = self.shape(*a);
                    let c = node.cols;
                    if adj[*a].is_some() {
                        // dA += dOut (r×c) · Bᵀ (c×k): transpose B first.
                        let bv = &self.nodes[*b].value;
                        let mut bt = vec![0.0; c * k];
                        for i in 0..k {
                            for j in 0..c {
                                bt[j * k + i] = bv[i * c + j];
                            }
                        }
                        let da = adj[*a].as_mut().unwrap();
                        matmul_nn_acc(&d, r, c, &bt, k, da);
                    }
                    if let Some(db) = adj[*b].as_mut() {
                        // dB += Aᵀ (k×r) · dOut (r×c)
                        matmul_tn_acc(&self.nodes[*a].value, r, k, &d, c, db);
                    }
                }
                Op::AddRow { a, bias } => {
                    let c = node.cols;
                    if let Some(da) = adj[*a].as_mut() {
                        for (x, &g) in da.iter_mut().zip(&d) {
                            *x += g;
                        }
                    }
                    if let Some(db) = adj[*bias].as_mut() {
                        for row in d.chunks_exact(c) {
                            for j in 0..c {
                                db[j] += row[j];
                            }
                        }
                    }
                }
                Op::LeakyRelu { a, slope } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let av = &self.nodes[*a].value;
                        for i in 0..d.len() {
                            let m = if av[i] >= 0.0 { 1.0 } else { *slope };
                            da[i] += d[i] * m;
                        }
                    }
                }
                Op::Scale { a, factor } => {
                    if let Some(da) = adj[*a].as_mut() {
                        for i in 0..d.len() {
                            da[i] += d[i] * factor;
                        }
                    }
                }
                Op::MulMask { a, mask } => {
                    if let Some(da) = adj[*a].as_mut() {
                        for i in 0..d.len() {
                            da[i] += d[i] * mask[i];
                        }
                    }
                }
                Op::Srvt { a, eps } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let c = node.cols;
                        let av = &self.nodes[*a].value;
                        for i in 0..node.rows {
                            let xr = &av[i * c..(i + 1) * c];
                            let dr = &d[i * c..(i + 1) * c];
                            let gr = &mut da[i * c..(i + 1) * c];
                            let mut prev = 0.0;
                            let mut slopes = vec![0.0; c];
                            for j in 0..c {
                                slopes[j] = smoothed_slope(xr[j] - prev, *eps);
                                prev = xr[j];
                            }
                            for j in 0..c {
                                let next = if j + 1 < c {
                                    dr[j + 1] * slopes[j + 1]
                                } else {
                                    0.0
                                };
                                gr[j] += dr[j] * slopes[j] - next;
                            }
                        }
                    }
                }
                Op::SrvtT { w, slopes } => {
                    if let Some(dw) = adj[*w].as_mut() {
                        let c = node.cols;
                        for i in 0..node.rows {
                            let dr = &d[i * c..(i + 1) * c];
                            let sr = &slopes[i * c..(i + 1) * c];
                            let gr = &mut dw[i * c..(i + 1) * c];
                            for j in 0..c {
                                let prev = if j > 0 { dr[j - 1] } else { 0.0 };
                                gr[j] += sr[j] * (dr[j] - prev);
                            }
                        }
                    }
                }
                Op::RowSumSq { a } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let c = self.nodes[*a].cols;
                        let av = &self.nodes[*a].value;
                        for i in 0..node.rows {
                            let g = d[i];
                            for j in 0..c {
                                da[i * c + j] += g * 2.0 * av[i * c + j];
                            }
                        }
                    }
                }
                Op::Pow { a, exponent } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let av = &self.nodes[*a].value;
                        let e = *exponent;
                        for i in 0..d.len() {
                            let base = if e < 1.0 { av[i].max(POWER_FLOOR) } else { av[i] };
                            da[i] += d[i] * e * base.powf(e - 1.0);
                        }
                    }
                }
                Op::WeightedMean { a, weights } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let g = d[0];
                        for i in 0..da.len() {
                            da[i] += g * weights[i];
                        }
                    }
                }
                Op::Root { a, p } => {
                    if let Some(da) = adj[*a].as_mut() {
                        let x = self.nodes[*a].value[0];
                        // Constant below the floor; the right-derivative above.
                        if x >= POWER_FLOOR {
                            let e = 1.0 / p;
                            da[0] += d[0] * e * x.powf(e - 1.0);
                        }
                    }
                }
                Op::Add { a, b } => {
                    for &src in &[*a, *b] {
                        if let Some(ds) = adj[src].as_mut() {
                            for i in 0..d.len() {
                                ds[i] += d[i];
                            }
                        }
                    }
                }
                Op::Sub { a, b } => {
                    if let Some(da) = adj[*a].as_mut() {
                        for i in 0..d.len() {
                            da[i] += d[i];
                        }
                    }
                    if let Some(db) = adj[*b].as_mut() {
                        for i in 0..d.len() {
                            db[i] -= d[i];
                        }
                    }
                }
            }
            adj[id] = Some(d);
        }
        Gradients { adj }
    }
}

pub struct Gradients {
    adj: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Adjoint of a node; None when the node did not require gradients.
    pub fn wrt(&self, id: NodeId) -> Option<&[f64]> {
        self.adj[id].as_deref()
    }
}
