//! The maximal p-centrality discrepancy estimator.
//!
//! For distributions P, Q and a Lipschitz budget K, the quantity of interest
//! is the supremum over K-Lipschitz critics D: R^m → R^n of
//!
//!   (E_P ||D(x)||^p)^(1/p) − (E_Q ||D(y)||^p)^(1/p)
//!
//! i.e. the gap of p-centralities of the pushforwards at base point zero.
//! The estimator ascends critic parameters by Adam on minibatch objectives
//! (full-support batches when the dataset fits in one batch), keeps the
//! Lipschitz contract with one warm-started power iteration per step, and
//! reports the best full-dataset value observed under certified-K
//! (100-iteration) normalization — best-iterate reporting for a supremum.

mod critic;

pub use critic::CriticNetwork;

use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamHyper, AdamState, Tape};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::{check_order, EmpiricalDistribution};
use crate::seeding::{self, streams};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyConfig {
    pub p: f64,
    /// Critic output dimension.
    pub n: usize,
    /// Lipschitz budget K.
    pub k_lip: f64,
    pub srvt: bool,
    /// Ascent steps.
    pub steps: usize,
    pub batch_size: usize,
    /// Hidden layer widths of the critic.
    pub hidden: Vec<usize>,
    pub adam: AdamHyper,
    /// Cadence of certified full-dataset evaluations.
    pub eval_every: usize,
    pub seed: u64,
}

impl DiscrepancyConfig {
    pub fn new(p: f64, n: usize, k_lip: f64) -> Self {
        DiscrepancyConfig {
            p,
            n,
            k_lip,
            srvt: false,
            steps: 5000,
            batch_size: 64,
            hidden: vec![128, 128, 128],
            adam: AdamHyper {
                lr: 1e-3,
                ..AdamHyper::default()
            },
            eval_every: 100,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_order(self.p)?;
        if self.n < 1 {
            return Err(Error::InvalidConfig("critic output dimension must be >= 1".into()));
        }
        if !(self.k_lip > 0.0) {
            return Err(Error::InvalidConfig("Lipschitz budget K must be > 0".into()));
        }
        if self.steps < 1 || self.batch_size < 1 || self.eval_every < 1 {
            return Err(Error::InvalidConfig(
                "steps, batch_size, and eval_every must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscrepancyEstimate {
    /// Best certified full-dataset objective (max over `trace`).
    pub value: f64,
    /// Certified evaluations at their ascent steps, in order.
    pub trace: Vec<TracePoint>,
    pub best_step: usize,
    /// Certified per-layer sigmas measured at the best checkpoint.
    pub certified_sigmas: Vec<f64>,
    /// Wall time is informational only and never serialized: emitted files
    /// must be byte-identical across reruns.
    #[serde(skip, default)]
    pub wall_time: Duration,
}

/// An estimate together with the critic that achieved it (certified
/// normalization applied), for downstream checks and warm starts.
#[derive(Clone, Debug)]
pub struct DiscrepancyOutcome {
    pub estimate: DiscrepancyEstimate,
    pub critic: CriticNetwork,
}

/// Critic objective on two equally weighted batches:
/// (mean ||D(x)||^p)^(1/p) − (mean ||D(y)||^p)^(1/p).
pub fn critic_objective(
    critic: &CriticNetwork,
    xs: &Matrix,
    ys: &Matrix,
    p: f64,
) -> Result<f64> {
    check_order(p)?;
    if xs.rows == 0 || ys.rows == 0 {
        return Err(Error::EmptySupport);
    }
    let wx = vec![1.0 / xs.rows as f64; xs.rows];
    let wy = vec![1.0 / ys.rows as f64; ys.rows];
    Ok(objective_value(critic, xs, &wx, ys, &wy, p))
}

/// Weighted objective used by evaluations; keep in sync with the tape path.
pub fn objective_value(
    critic: &CriticNetwork,
    xs: &Matrix,
    wx: &[f64],
    ys: &Matrix,
    wy: &[f64],
    p: f64,
) -> f64 {
    critic.term_value(xs, wx, p) - critic.term_value(ys, wy, p)
}

/// Tape variant of `critic_objective`; returns the objective node so callers
/// can differentiate. Batches carry explicit weights.
pub fn objective_on_tape(
    tape: &mut Tape,
    critic: &CriticNetwork,
    xs: &Matrix,
    wx: &[f64],
    ys: &Matrix,
    wy: &[f64],
    p: f64,
    trainable: bool,
) -> (usize, Vec<crate::autodiff::LayerNodes>) {
    let x = tape.leaf(xs.rows, xs.cols, xs.data.clone(), false);
    let y = tape.leaf(ys.rows, ys.cols, ys.data.clone(), false);
    let (term_x, handles_x) = critic.term_on_tape(tape, x, wx, p, trainable);
    let (term_y, handles_y) = critic.term_on_tape(tape, y, wy, p, trainable);
    let obj = tape.sub(term_x, term_y);
    // The two passes pushed separate leaves for the same parameters; fold the
    // handle pairs so gradient extraction sums both contributions.
    (obj, merge_handles(handles_x, handles_y))
}

// Parameters appear as two leaf sets (one per term). Rather than teach the
// tape about shared leaves, gradient extraction adds the two adjoints.
fn merge_handles(
    a: Vec<crate::autodiff::LayerNodes>,
    b: Vec<crate::autodiff::LayerNodes>,
) -> Vec<crate::autodiff::LayerNodes> {
    let mut out = a;
    out.extend(b);
    out
}

/// Sample a batch of `size` rows from `dist` (weighted with replacement),
/// or the full support with its weights when it fits in one batch.
fn draw_batch(
    dist: &EmpiricalDistribution,
    size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> (Matrix, Vec<f64>) {
    let n = dist.len();
    let m = dist.dim();
    if n <= size {
        return (
            Matrix {
                rows: n,
                cols: m,
                data: dist.points_flat().to_vec(),
            },
            dist.weights().to_vec(),
        );
    }
    let index = WeightedIndex::new(dist.weights()).expect("weights are normalized");
    let mut data = Vec::with_capacity(size * m);
    for _ in 0..size {
        let i = index.sample(rng);
        data.extend_from_slice(dist.point(i));
    }
    (
        Matrix {
            rows: size,
            cols: m,
            data,
        },
        vec![1.0 / size as f64; size],
    )
}

/// Certified full-dataset evaluation: clone, renormalize with 100 power
/// iterations, evaluate the weighted objective on the complete supports.
fn certified_eval(
    critic: &CriticNetwork,
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
) -> (f64, Vec<f64>, CriticNetwork) {
    let mut certified = critic.clone();
    let sigmas = certified.normalize_certified();
    let xs = Matrix {
        rows: source.len(),
        cols: source.dim(),
        data: source.points_flat().to_vec(),
    };
    let ys = Matrix {
        rows: target.len(),
        cols: target.dim(),
        data: target.points_flat().to_vec(),
    };
    let value = objective_value(
        &certified,
        &xs,
        source.weights(),
        &ys,
        target.weights(),
        p,
    );
    (value, sigmas, certified)
}

/// Estimate L_{p,n,K}(P, Q) by stochastic ascent from a fresh seeded critic.
pub fn estimate_discrepancy(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    cfg: &DiscrepancyConfig,
) -> Result<DiscrepancyOutcome> {
    cfg.validate()?;
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            got: target.dim(),
        });
    }
    let critic = CriticNetwork::init(
        source.dim(),
        &cfg.hidden,
        cfg.n,
        cfg.k_lip,
        cfg.srvt,
        cfg.seed,
        streams::INIT_CRITIC,
    );
    estimate_discrepancy_from(source, target, cfg, critic)
}

/// Same ascent loop, warm-started from an existing critic (e.g. a padded
/// optimum). The step-0 certified evaluation enters the trace, so the
/// reported best can never fall below the warm start's value.
pub fn estimate_discrepancy_from(
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    cfg: &DiscrepancyConfig,
    mut critic: CriticNetwork,
) -> Result<DiscrepancyOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rng = seeding::stream(cfg.seed, streams::DISC_BATCH);

    let (v0, sig0, best_critic0) = certified_eval(&critic, source, target, cfg.p);
    let mut trace = vec![TracePoint { step: 0, value: v0 }];
    let mut best = v0;
    let mut best_step = 0usize;
    let mut best_sigmas = sig0;
    let mut best_critic = best_critic0;

    let mut adam = AdamState::new(cfg.adam, critic.net.param_count());

    for step in 1..=cfg.steps {
        let (bx, bwx) = draw_batch(source, cfg.batch_size, &mut rng);
        let (by, bwy) = draw_batch(target, cfg.batch_size, &mut rng);

        let mut tape = Tape::new();
        let (obj, handles) =
            objective_on_tape(&mut tape, &critic, &bx, &bwx, &by, &bwy, cfg.p, true);
        let grads = tape.backward(obj);

        // The parameters were pushed twice (once per term); add the adjoints.
        let half = handles.len() / 2;
        let mut flat = critic.net.flatten_grads(&grads, &handles[..half]);
        let flat_y = critic.net.flatten_grads(&grads, &handles[half..]);
        for (g, gy) in flat.iter_mut().zip(&flat_y) {
            // Ascend: Adam minimizes, so feed the negated gradient.
            *g = -(*g + gy);
        }
        let mut params = critic.net.flatten_params();
        adam.step(&mut params, &flat);
        critic.net.load_params(&params);
        critic.normalize_train();

        if step % cfg.eval_every == 0 || step == cfg.steps {
            let (v, sigmas, certified) = certified_eval(&critic, source, target, cfg.p);
            trace.push(TracePoint { step, value: v });
            if v > best {
                best = v;
                best_step = step;
                best_sigmas = sigmas;
                best_critic = certified;
            }
        }
    }

    Ok(DiscrepancyOutcome {
        estimate: DiscrepancyEstimate {
            value: best,
            trace,
            best_step,
            certified_sigmas: best_sigmas,
            wall_time: start.elapsed(),
        },
        critic: best_critic,
    })
}

/// Base-point independence: evaluates the centrality gap of the pushforwards
/// at base `x0` with critic D, and at base 0 with the shifted critic D − x0.
/// The two agree exactly.
pub fn base_point_check(
    critic: &CriticNetwork,
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
    x0: &[f64],
) -> Result<(f64, f64)> {
    if x0.len() != critic.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: critic.output_dim(),
            got: x0.len(),
        });
    }
    let push = |d: &EmpiricalDistribution, c: &CriticNetwork| -> Result<EmpiricalDistribution> {
        d.pushforward(|y| c.apply(y))
    };
    let at_x0 = push(source, critic)?.p_centrality(x0, p)?
        - push(target, critic)?.p_centrality(x0, p)?;

    let shifted = critic.with_output_offset(x0)?;
    let zero = vec![0.0; critic.output_dim()];
    let at_zero = push(source, &shifted)?.p_centrality(&zero, p)?
        - push(target, &shifted)?.p_centrality(&zero, p)?;
    Ok((at_x0, at_zero))
}

/// L∞ lower-bound check: the centrality gap of the pushforwards under a
/// fixed critic, maximized over a base-point grid, must not exceed
/// bound + tol, where bound is the max of the two directed estimates.
pub fn linf_lower_bound_check(
    critic: &CriticNetwork,
    source: &EmpiricalDistribution,
    target: &EmpiricalDistribution,
    p: f64,
    grid: &[Vec<f64>],
    bound: f64,
    tol: f64,
) -> Result<(f64, bool)> {
    let fp = source.pushforward(|y| critic.apply(y))?;
    let fq = target.pushforward(|y| critic.apply(y))?;
    let mut worst = 0.0f64;
    for x0 in grid {
        let gap = (fp.p_centrality(x0, p)? - fq.p_centrality(x0, p)?).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok((worst, worst <= bound + tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use crate::verify::oracles::{finite_diff_gradient, max_rel_error};
    use rand::Rng;

    fn random_dist(k: usize, dim: usize, rng: &mut rand_chacha::ChaCha8Rng) -> EmpiricalDistribution {
        let pts: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        EmpiricalDistribution::uniform(pts).unwrap()
    }

    fn full_batch(d: &EmpiricalDistribution) -> (Matrix, Vec<f64>) {
        (
            Matrix {
                rows: d.len(),
                cols: d.dim(),
                data: d.points_flat().to_vec(),
            },
            d.weights().to_vec(),
        )
    }

    #[test]
    fn zero_critic_has_zero_objective() {
        let mut critic = CriticNetwork::init(2, &[4], 3, 1.0, false, 1, 3);
        for l in &mut critic.net.layers {
            l.weight.data.fill(0.0);
            l.bias.fill(0.0);
        }
        let xs = Matrix::from_rows(vec![vec![1.0, 2.0], vec![-1.0, 0.5]]);
        let ys = Matrix::from_rows(vec![vec![0.0, 0.0]]);
        assert_eq!(critic_objective(&critic, &xs, &ys, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn identical_batches_cancel_exactly() {
        let critic = CriticNetwork::init(2, &[8, 8], 4, 1.5, true, 2, 3);
        let xs = Matrix::from_rows(vec![vec![0.3, -0.7], vec![1.2, 0.1], vec![-0.5, 0.9]]);
        assert_eq!(critic_objective(&critic, &xs, &xs, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn identity_critic_worked_example() {
        // For the scalar identity critic, ||D(x)|| = |x|, so the objective on
        // xs = {2}, ys = {1} with p = 1 is |2| - |1| = 1.
        let mut critic = CriticNetwork::init(1, &[], 1, 1.0, false, 3, 3);
        critic.net.layers[0].weight.data = vec![1.0];
        critic.net.layers[0].bias = vec![0.0];
        let xs = Matrix::from_rows(vec![vec![2.0]]);
        let ys = Matrix::from_rows(vec![vec![1.0]]);
        let got = critic_objective(&critic, &xs, &ys, 1.0).unwrap();
        assert!((got - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tape_and_plain_objectives_agree_bitwise() {
        let mut rng = stream(31, 920);
        for trial in 0..10 {
            let srvt_on = trial % 2 == 0;
            let p = if trial % 3 == 0 { 1.0 } else { 2.0 };
            let critic = CriticNetwork::init(2, &[8, 8], 4, 1.7, srvt_on, trial as u64, 3);
            let source = random_dist(6, 2, &mut rng);
            let target = random_dist(5, 2, &mut rng);
            let (xs, wx) = full_batch(&source);
            let (ys, wy) = full_batch(&target);
            let plain = objective_value(&critic, &xs, &wx, &ys, &wy, p);
            let mut tape = Tape::new();
            let (obj, _) = objective_on_tape(&mut tape, &critic, &xs, &wx, &ys, &wy, p, false);
            assert_eq!(
                plain.to_bits(),
                tape.scalar(obj).to_bits(),
                "paths diverged on trial {trial}"
            );
        }
    }

    #[test]
    fn gradcheck_full_critic_against_finite_differences() {
        let mut rng = stream(33, 921);
        for trial in 0..6 {
            let srvt_on = trial % 2 == 1;
            let p = [1.0, 1.5, 2.0][trial % 3];
            let critic = CriticNetwork::init(2, &[6, 5], 3, 1.2, srvt_on, 100 + trial as u64, 3);
            let source = random_dist(5, 2, &mut rng);
            let target = random_dist(4, 2, &mut rng);
            let (xs, wx) = full_batch(&source);
            let (ys, wy) = full_batch(&target);

            // Analytic gradient from the tape. For velocity-block critics the
            // smoothed forward makes the whole objective C¹ so central
            // differences are meaningful.
            let mut tape = Tape::new();
            tape.smooth_srvt_forward = true;
            let (obj, handles) =
                objective_on_tape(&mut tape, &critic, &xs, &wx, &ys, &wy, p, true);
            let grads = tape.backward(obj);
            let half = handles.len() / 2;
            let mut analytic = critic.net.flatten_grads(&grads, &handles[..half]);
            let other = critic.net.flatten_grads(&grads, &handles[half..]);
            for (a, b) in analytic.iter_mut().zip(&other) {
                *a += b;
            }

            let params = critic.net.flatten_params();
            let numeric = finite_diff_gradient(
                |theta: &[f64]| {
                    let mut probe = critic.clone();
                    probe.net.load_params(theta);
                    let mut t = Tape::new();
                    t.smooth_srvt_forward = true;
                    let (o, _) = objective_on_tape(&mut t, &probe, &xs, &wx, &ys, &wy, p, false);
                    t.scalar(o)
                },
                &params,
                1e-6,
            );
            let err = max_rel_error(&analytic, &numeric, 1e-3);
            assert!(
                err <= 1e-5,
                "trial {trial} (srvt={srvt_on}, p={p}): max rel error {err}"
            );
        }
    }

    #[test]
    fn zero_pad_preserves_objective_bitwise() {
        let mut rng = stream(34, 922);
        for trial in 0..8 {
            let srvt_on = trial % 2 == 0;
            let critic = CriticNetwork::init(2, &[8], 3, 1.0, srvt_on, trial as u64, 3);
            let padded = critic.embed_zero_pad(16).unwrap();
            let source = random_dist(6, 2, &mut rng);
            let target = random_dist(6, 2, &mut rng);
            let (xs, wx) = full_batch(&source);
            let (ys, wy) = full_batch(&target);
            for p in [1.0, 2.0] {
                let a = objective_value(&critic, &xs, &wx, &ys, &wy, p);
                let b = objective_value(&padded, &xs, &wx, &ys, &wy, p);
                assert_eq!(a.to_bits(), b.to_bits());
            }
            assert!(matches!(
                critic.embed_zero_pad(3),
                Err(Error::InvalidPad { .. })
            ));
        }
    }

    #[test]
    fn base_point_translation_is_exact() {
        let mut rng = stream(35, 923);
        for trial in 0..10 {
            let srvt_on = trial % 2 == 0;
            let critic = CriticNetwork::init(2, &[6, 6], 3, 1.1, srvt_on, 40 + trial as u64, 3);
            let source = random_dist(5, 2, &mut rng);
            let target = random_dist(7, 2, &mut rng);
            let x0: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for p in [1.0, 2.0, 3.0] {
                let (a, b) = base_point_check(&critic, &source, &target, p, &x0).unwrap();
                assert_eq!(a.to_bits(), b.to_bits(), "trial {trial} p {p}");
            }
        }
    }

    #[test]
    fn k_doubling_doubles_objective() {
        let mut rng = stream(36, 924);
        for trial in 0..8 {
            let critic = CriticNetwork::init(2, &[8, 8], 4, 1.0, false, 50 + trial as u64, 3);
            let mut doubled = critic.clone();
            doubled.k_lip = 2.0;
            let source = random_dist(6, 2, &mut rng);
            let target = random_dist(5, 2, &mut rng);
            let (xs, wx) = full_batch(&source);
            let (ys, wy) = full_batch(&target);
            for p in [1.0, 2.0] {
                let v1 = objective_value(&critic, &xs, &wx, &ys, &wy, p);
                let v2 = objective_value(&doubled, &xs, &wx, &ys, &wy, p);
                assert!(
                    (v2 - 2.0 * v1).abs() <= 1e-12 * v1.abs().max(1.0),
                    "trial {trial} p {p}: {v2} vs 2×{v1}"
                );
            }
        }
    }

    #[test]
    fn self_discrepancy_is_zero_on_full_support() {
        // With full-support batches and identical inputs, both terms are the
        // same computation, so the certified evaluation is exactly zero and
        // ascent cannot manufacture a gap.
        let mut rng = stream(37, 925);
        let d = random_dist(10, 2, &mut rng);
        let mut cfg = DiscrepancyConfig::new(1.0, 2, 1.0);
        cfg.steps = 50;
        cfg.eval_every = 10;
        cfg.hidden = vec![8, 8];
        cfg.seed = 5;
        let out = estimate_discrepancy(&d, &d, &cfg).unwrap();
        assert_eq!(out.estimate.value, 0.0);
        assert!(out.estimate.trace.iter().all(|t| t.value == 0.0));
    }

    #[test]
    fn estimate_value_is_trace_max_and_warm_start_is_monotone() {
        let mut rng = stream(38, 926);
        let source = random_dist(8, 1, &mut rng);
        let target = random_dist(8, 1, &mut rng);
        let mut cfg = DiscrepancyConfig::new(1.0, 1, 1.0);
        cfg.steps = 300;
        cfg.eval_every = 50;
        cfg.hidden = vec![16, 16];
        cfg.seed = 9;
        let out = estimate_discrepancy(&source, &target, &cfg).unwrap();
        let trace_max = out
            .estimate
            .trace
            .iter()
            .map(|t| t.value)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(out.estimate.value, trace_max);

        // Warm start from the padded best critic; step-0 evaluation equals the
        // unpadded best, so the padded best can only improve.
        let padded = out.critic.embed_zero_pad(4).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.n = 4;
        cfg2.steps = 100;
        let out2 = estimate_discrepancy_from(&source, &target, &cfg2, padded).unwrap();
        assert!(out2.estimate.value >= out.estimate.value - 1e-9);
    }
}
