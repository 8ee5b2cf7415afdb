//! The Lipschitz-controlled critic: a spectrally normalized dense network,
//! a global output scale K, an optional square-root velocity block, and an
//! optional zero-padding embedding of the output space.
//!
//! Layer weights are stored post-normalization, so the dense part of a
//! freshly normalized critic is 1-Lipschitz and the whole map (without the
//! velocity block) is K-Lipschitz. The velocity block is not Lipschitz near
//! zero increments, so certified-K statements always refer to the pre-block
//! network.

use crate::autodiff::net::CERTIFIED_ITERS;
use crate::autodiff::tape;
use crate::autodiff::{Activation, DenseNet, LayerNodes, NodeId, Tape};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::srvt;

/// Tape nodes of one critic forward pass, kept so the objective term and the
/// R1 input-gradient construction can share the pass.
pub struct CriticForward {
    /// Final output (post-scale, post-velocity-block), rows × dense_dim.
    pub out: NodeId,
    /// Scaled dense output before the velocity block; equals `out` when the
    /// block is off.
    pub scaled: NodeId,
    pub handles: Vec<LayerNodes>,
}

#[derive(Clone, Debug)]
pub struct CriticNetwork {
    pub net: DenseNet,
    /// Global Lipschitz budget, applied as one scalar on the dense output.
    pub k_lip: f64,
    /// Apply the square-root velocity transform after the scaled output.
    pub srvt: bool,
    pub srvt_eps: f64,
    /// Output dimension after the constant-zero embedding; equals the dense
    /// output dimension when no padding is in effect.
    pub pad_to: usize,
    /// Constant subtracted from the (padded) output; used to realize the
    /// shifted critic D - x0 in base-point arguments. None means zero.
    pub output_offset: Option<Vec<f64>>,
}

impl CriticNetwork {
    /// Seeded initialization; every layer is certified-normalized so the
    /// Lipschitz contract holds from step zero.
    pub fn init(
        input_dim: usize,
        hidden: &[usize],
        n: usize,
        k_lip: f64,
        srvt: bool,
        seed: u64,
        stream_id: u64,
    ) -> CriticNetwork {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(n);
        let mut net = DenseNet::init(&sizes, seed, stream_id);
        net.normalize_layers(CERTIFIED_ITERS);
        CriticNetwork {
            net,
            k_lip,
            srvt,
            srvt_eps: srvt::DEFAULT_EPSILON,
            pad_to: n,
            output_offset: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Output dimension including any zero padding.
    pub fn output_dim(&self) -> usize {
        self.pad_to
    }

    /// Dense output dimension before padding.
    pub fn dense_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Evaluate the critic on one point.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = Matrix {
            rows: 1,
            cols: x.len(),
            data: x.to_vec(),
        };
        self.apply_batch(&m).data
    }

    /// Evaluate the critic on a batch (rows = samples).
    pub fn apply_batch(&self, x: &Matrix) -> Matrix {
        let mut out = self.net.forward_batch(x);
        for v in &mut out.data {
            *v = self.k_lip * *v;
        }
        if self.srvt {
            let c = out.cols;
            for row in out.data.chunks_exact_mut(c) {
                let mut prev = 0.0;
                for v in row.iter_mut() {
                    let d = *v - prev;
                    prev = *v;
                    *v = srvt::signed_sqrt(d);
                }
            }
        }
        let mut full = if self.pad_to > out.cols {
            let mut padded = Matrix::zeros(out.rows, self.pad_to);
            for i in 0..out.rows {
                padded.data[i * self.pad_to..i * self.pad_to + out.cols]
                    .copy_from_slice(out.row(i));
            }
            padded
        } else {
            out
        };
        if let Some(offset) = &self.output_offset {
            debug_assert_eq!(offset.len(), self.pad_to);
            for row in full.data.chunks_exact_mut(self.pad_to) {
                for j in 0..self.pad_to {
                    row[j] -= offset[j];
                }
            }
        }
        full
    }

    /// Cheap per-training-step normalization: warm-started power iterations
    /// per layer until the sigma estimate stalls, so the certified norm
    /// stays within the 1e-3 contract after every step.
    pub fn normalize_train(&mut self) {
        self.net.normalize_layers_adaptive(1e-7);
    }

    /// Certified normalization: 100 power iterations per layer, then a fresh
    /// 100-iteration measurement of each layer as stored. Returns the
    /// measured sigmas.
    pub fn normalize_certified(&mut self) -> Vec<f64> {
        self.net.normalize_layers(CERTIFIED_ITERS);
        self.net.certified_sigmas()
    }

    /// The natural embedding of the output space into R^{n'}: n' - n
    /// constant-zero coordinates are appended after the velocity block.
    pub fn embed_zero_pad(&self, n_prime: usize) -> Result<CriticNetwork> {
        if n_prime <= self.pad_to {
            return Err(Error::InvalidPad {
                current: self.pad_to,
                target: n_prime,
            });
        }
        let mut padded = self.clone();
        padded.pad_to = n_prime;
        if let Some(offset) = &mut padded.output_offset {
            offset.resize(n_prime, 0.0);
        }
        Ok(padded)
    }

    /// Shifted critic computing D(x) - x0.
    pub fn with_output_offset(&self, x0: &[f64]) -> Result<CriticNetwork> {
        if x0.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: x0.len(),
            });
        }
        let mut shifted = self.clone();
        let mut offset = x0.to_vec();
        if let Some(existing) = &self.output_offset {
            for (o, e) in offset.iter_mut().zip(existing) {
                *o += e;
            }
        }
        shifted.output_offset = Some(offset);
        Ok(shifted)
    }

    /// Push one critic forward pass onto the tape. Offsets are an
    /// evaluation-only feature and must be absent here.
    pub fn forward_nodes(&self, tape: &mut Tape, x: NodeId, trainable: bool) -> CriticForward {
        assert!(
            self.output_offset.is_none(),
            "offset critics are evaluation-only"
        );
        let (y, handles) = self.net.forward_on_tape(tape, x, trainable);
        let scaled = tape.scale(y, self.k_lip);
        let out = if self.srvt {
            tape.srvt(scaled, self.srvt_eps)
        } else {
            scaled
        };
        CriticForward {
            out,
            scaled,
            handles,
        }
    }

    /// (weighted_mean of ||rows||^p)^(1/p) over the forward output node.
    pub fn term_from_forward(
        &self,
        tape: &mut Tape,
        out: NodeId,
        weights: &[f64],
        p: f64,
    ) -> NodeId {
        let s = tape.row_sumsq(out);
        let powed = tape.pow(s, 0.5 * p);
        let mp = tape.weighted_mean(powed, weights.to_vec());
        tape.root(mp, p)
    }

    /// Build the critic's objective term (weighted_mean of ||D(x)||^p)^(1/p)
    /// on a tape. The padding coordinates are identically zero and add
    /// nothing to the row sums of squares, so they are not materialized.
    pub fn term_on_tape(
        &self,
        tape: &mut Tape,
        x: NodeId,
        weights: &[f64],
        p: f64,
        trainable: bool,
    ) -> (NodeId, Vec<LayerNodes>) {
        let fwd = self.forward_nodes(tape, x, trainable);
        let term = self.term_from_forward(tape, fwd.out, weights, p);
        (term, fwd.handles)
    }

    /// Per-row squared norm of g_i = ∇_x ||D(x_i)||², built on the tape so the
    /// result can be differentiated with respect to the critic parameters
    /// (the double-backward needed by the R1 penalty).
    ///
    /// The gradient is 2·Jᵀ·D(x) with J the input Jacobian; the chain is
    /// unrolled layer by layer using the leaky-ReLU derivative masks and (for
    /// velocity-block critics) the smoothed block slopes captured from the
    /// forward values. Masks are exact almost everywhere; the block slopes'
    /// own parameter dependence is dropped, which only perturbs the penalty's
    /// second-order term (see the trainer docs).
    pub fn input_grad_sq_on_tape(&self, tape: &mut Tape, fwd: &CriticForward) -> NodeId {
        let mut w = tape.scale(fwd.out, 2.0);
        if self.srvt {
            let (rows, cols) = tape.shape(fwd.scaled);
            let vals = tape.value(fwd.scaled).to_vec();
            let mut slopes = vec![0.0; rows * cols];
            for (row, srow) in vals
                .chunks_exact(cols)
                .zip(slopes.chunks_exact_mut(cols))
            {
                let mut prev = 0.0;
                for j in 0..cols {
                    srow[j] = srvt::smoothed_slope(row[j] - prev, self.srvt_eps);
                    prev = row[j];
                }
            }
            w = tape.srvt_t(w, slopes);
        }
        w = tape.scale(w, self.k_lip);
        for (layer, h) in self.net.layers.iter().zip(&fwd.handles).rev() {
            if let Activation::LeakyRelu(s) = layer.activation {
                let mask: Vec<f64> = tape
                    .value(h.pre)
                    .iter()
                    .map(|&v| if v >= 0.0 { 1.0 } else { s })
                    .collect();
                w = tape.mul_mask(w, mask);
            }
            w = tape.matmul_nn(w, h.w);
        }
        tape.row_sumsq(w)
    }

    /// Plain (tape-free) objective term; arithmetic is kept op-for-op
    /// identical to `term_on_tape` so both paths agree bit-for-bit.
    pub fn term_value(&self, xs: &Matrix, weights: &[f64], p: f64) -> f64 {
        debug_assert_eq!(xs.rows, weights.len());
        let out = self.apply_batch(xs);
        let mut mp = 0.0;
        for (i, row) in out.data.chunks_exact(out.cols).enumerate() {
            let mut s = 0.0;
            for &v in row {
                s += v * v;
            }
            mp += weights[i] * s.powf(0.5 * p);
        }
        mp.max(tape::POWER_FLOOR).powf(1.0 / p)
    }
}
