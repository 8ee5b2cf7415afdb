//! Dense networks with per-layer spectral normalization.
//!
//! Lipschitz control is projection-style: Adam steps the raw weights, then
//! each layer is renormalized in place by its power-iteration spectral norm
//! estimate (one warm-started iteration during training, 100 iterations when
//! a certified bound is needed). The stored weight is therefore always the
//! effective weight. Any global Lipschitz constant K is applied downstream
//! as a single scalar on the network output, never inside the layers.

use crate::linalg::{matvec, matvec_t, norm2, Matrix};
use crate::seeding;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::tape::{NodeId, Tape};

/// Power iterations used when a certified spectral-norm bound is required.
pub const CERTIFIED_ITERS: usize = 100;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    /// max(x, slope·x); 1-Lipschitz for slope in [0, 1].
    LeakyRelu(f64),
    Identity,
}

impl Activation {
    pub fn tag(&self) -> String {
        match self {
            Activation::LeakyRelu(s) => format!("leaky_relu({s})"),
            Activation::Identity => "identity".to_string(),
        }
    }

    pub fn from_tag(tag: &str) -> Option<Activation> {
        if tag == "identity" {
            return Some(Activation::Identity);
        }
        let inner = tag.strip_prefix("leaky_relu(")?.strip_suffix(')')?;
        inner.parse().ok().map(Activation::LeakyRelu)
    }
}

#[derive(Clone, Debug)]
pub struct DenseLayer {
    /// k_out × k_in, stored post-normalization.
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
    /// Persistent left-singular-vector estimate for warm-started power
    /// iteration; length k_out.
    pub u: Vec<f64>,
}

impl DenseLayer {
    pub fn k_in(&self) -> usize {
        self.weight.cols
    }

    pub fn k_out(&self) -> usize {
        self.weight.rows
    }

    pub fn param_count(&self) -> usize {
        self.weight.data.len() + self.bias.len()
    }
}

/// Power-iteration estimate of the largest singular value of `w`, refining
/// the persistent estimate `u` in place. A zero matrix reports sigma = 0 and
/// leaves `u` untouched. The estimate is a Rayleigh quotient, so it
/// approaches the true norm from below.
pub fn spectral_norm(w: &Matrix, u: &mut [f64], iters: usize) -> f64 {
    debug_assert_eq!(u.len(), w.rows);
    let mut sigma = 0.0;
    for _ in 0..iters {
        let mut v = matvec_t(w, u);
        let vn = norm2(&v);
        if vn < 1e-300 {
            return 0.0;
        }
        for x in &mut v {
            *x /= vn;
        }
        let wu = matvec(w, &v);
        sigma = norm2(&wu);
        if sigma < 1e-300 {
            return 0.0;
        }
        for (ui, wi) in u.iter_mut().zip(&wu) {
            *ui = wi / sigma;
        }
    }
    sigma
}

impl DenseLayer {
    /// Estimate sigma with `iters` power iterations and divide the weight by
    /// max(sigma, 1e-12). Returns the pre-normalization estimate.
    pub fn normalize(&mut self, iters: usize) -> f64 {
        let mut u = std::mem::take(&mut self.u);
        let sigma = spectral_norm(&self.weight, &mut u, iters);
        self.u = u;
        self.divide_by(sigma);
        sigma
    }

    /// Normalization for training steps: warm-started power iterations
    /// continue until one iteration improves the Rayleigh quotient by less
    /// than `tol` relative, capped at CERTIFIED_ITERS. A single fixed
    /// iteration is not enough when two singular values cross during ascent:
    /// the stale direction then underestimates sigma and the projected
    /// weight silently exceeds the Lipschitz budget.
    pub fn normalize_adaptive(&mut self, tol: f64) -> f64 {
        let mut u = std::mem::take(&mut self.u);
        let mut sigma = spectral_norm(&self.weight, &mut u, 1);
        for _ in 1..CERTIFIED_ITERS {
            let next = spectral_norm(&self.weight, &mut u, 1);
            let stalled = (next - sigma).abs() <= tol * next.max(1e-300);
            sigma = next;
            if stalled {
                break;
            }
        }
        self.u = u;
        self.divide_by(sigma);
        sigma
    }

    fn divide_by(&mut self, sigma: f64) {
        let denom = sigma.max(1e-12);
        for x in &mut self.weight.data {
            *x /= denom;
        }
    }
}

#[derive(Clone, Debug)]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

/// Handles to the tape nodes of one layer's parameters, kept so gradients
/// can be pulled out after backward and so the R1 path can reuse the same
/// weight nodes.
#[derive(Clone, Copy, Debug)]
pub struct LayerNodes {
    pub w: NodeId,
    pub b: NodeId,
    /// Pre-activation output of the affine map.
    pub pre: NodeId,
    /// Post-activation output.
    pub post: NodeId,
}

impl DenseNet {
    /// He-style initialization: W ~ N(0, 2/(k_in + k_out)), bias zero,
    /// u a seeded unit Gaussian. Hidden layers get leaky ReLU, the last
    /// layer is linear.
    pub fn init(sizes: &[usize], seed: u64, stream_id: u64) -> DenseNet {
        assert!(sizes.len() >= 2, "need at least input and output sizes");
        let mut rng = seeding::stream(seed, stream_id);
        let mut layers = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (k_in, k_out) = (sizes[l], sizes[l + 1]);
            let std = (2.0 / (k_in + k_out) as f64).sqrt();
            let mut weight = Matrix::zeros(k_out, k_in);
            for x in &mut weight.data {
                let z: f64 = rng.sample(StandardNormal);
                *x = std * z;
            }
            let mut u: Vec<f64> = (0..k_out).map(|_| rng.sample(StandardNormal)).collect();
            let un = norm2(&u).max(1e-300);
            for x in &mut u {
                *x /= un;
            }
            let activation = if l + 2 == sizes.len() {
                Activation::Identity
            } else {
                Activation::LeakyRelu(LEAKY_SLOPE)
            };
            layers.push(DenseLayer {
                weight,
                bias: vec![0.0; k_out],
                activation,
                u,
            });
        }
        DenseNet { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.k_in()).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.k_out()).unwrap_or(0)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Normalize every layer; returns the per-layer sigma estimates observed
    /// before division.
    pub fn normalize_layers(&mut self, iters: usize) -> Vec<f64> {
        self.layers.iter_mut().map(|l| l.normalize(iters)).collect()
    }

    /// Adaptive per-step normalization; see [`DenseLayer::normalize_adaptive`].
    pub fn normalize_layers_adaptive(&mut self, tol: f64) -> Vec<f64> {
        self.layers
            .iter_mut()
            .map(|l| l.normalize_adaptive(tol))
            .collect()
    }

    /// Per-layer certified spectral norms of the weights as stored (no
    /// mutation of weights; u is refined).
    pub fn certified_sigmas(&mut self) -> Vec<f64> {
        self.layers
            .iter_mut()
            .map(|l| {
                let mut u = std::mem::take(&mut l.u);
                let s = spectral_norm(&l.weight, &mut u, CERTIFIED_ITERS);
                l.u = u;
                s
            })
            .collect()
    }

    /// Plain forward of a batch (rows = samples), without building a tape.
    pub fn forward_batch(&self, x: &Matrix) -> Matrix {
        assert_eq!(x.cols, self.input_dim(), "input width mismatch");
        let mut cur = x.clone();
        for layer in &self.layers {
            let (r, c) = (cur.rows, layer.k_out());
            let mut next = Matrix::zeros(r, c);
            // X·Wᵀ via a transposed copy so the kernel vectorizes.
            let wt = layer.weight.transposed();
            crate::linalg::matmul_nn(&cur.data, r, layer.k_in(), &wt.data, c, &mut next.data);
            for row in next.data.chunks_exact_mut(c) {
                for j in 0..c {
                    row[j] += layer.bias[j];
                }
            }
            if let Activation::LeakyRelu(s) = layer.activation {
                for v in &mut next.data {
                    if *v < 0.0 {
                        *v *= s;
                    }
                }
            }
            cur = next;
        }
        cur
    }

    pub fn forward_single(&self, x: &[f64]) -> Vec<f64> {
        let m = Matrix {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        };
        self.forward_batch(&m).data
    }

    /// Push the parameters as tape leaves and build the forward graph on the
    /// given input node. `trainable` controls whether gradients flow to the
    /// parameters (a frozen critic inside a generator step sets it false).
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        x: NodeId,
        trainable: bool,
    ) -> (NodeId, Vec<LayerNodes>) {
        let mut cur = x;
        let mut handles = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let w = tape.leaf(
                layer.k_out(),
                layer.k_in(),
                layer.weight.data.clone(),
                trainable,
            );
            let b = tape.leaf(1, layer.k_out(), layer.bias.clone(), trainable);
            let prod = tape.matmul_nt(cur, w);
            let pre = tape.add_row(prod, b);
            let post = match layer.activation {
                Activation::LeakyRelu(s) => tape.leaky_relu(pre, s),
                Activation::Identity => pre,
            };
            handles.push(LayerNodes { w, b, pre, post });
            cur = post;
        }
        (cur, handles)
    }

    /// Flatten parameters in canonical order: per layer, weight row-major,
    /// then bias.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weight.data);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn load_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut off = 0;
        for l in &mut self.layers {
            let wlen = l.weight.data.len();
            l.weight.data.copy_from_slice(&flat[off..off + wlen]);
            off += wlen;
            let blen = l.bias.len();
            l.bias.copy_from_slice(&flat[off..off + blen]);
            off += blen;
        }
    }

    /// Collect gradients from a backward pass into the canonical flat layout.
    pub fn flatten_grads(&self, grads: &super::tape::Gradients, handles: &[LayerNodes]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for h in handles {
            out.extend_from_slice(grads.wrt(h.w).expect("weight leaf requires grad"));
            out.extend_from_slice(grads.wrt(h.b).expect("bias leaf requires grad"));
        }
        out
    }
}
