//! Desk-scale adversarial training on synthetic 2D mixtures.
//!
//! The discriminator ascends the critic objective
//! (mean‖D(x)‖^p)^(1/p) − (mean‖D(G(z))‖^p)^(1/p) under the spectral-norm
//! Lipschitz contract; the generator descends −(mean‖D(G(z))‖^p)^(1/p).
//! Evaluation is oracle-based: exact W1 between subsampled real and fake
//! batches, plus mode coverage against the known mixture centers.
//!
//! Everything a run emits (metrics.csv, checkpoint.bin, samples_*.csv) is
//! byte-identical across reruns with the same config. Wall-clock progress
//! goes to stderr only, and the `seconds` column is a fixed 0.0 placeholder
//! for the same reason.

pub mod dataset;

pub use dataset::{mode_coverage, sample_dataset, DatasetKind, DatasetSpec};

use std::fs;
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::autodiff::checkpoint::{net_meta, write_checkpoint, CheckpointMeta, FORMAT_TAG};
use crate::autodiff::{AdamHyper, AdamState, DenseNet, Tape};
use crate::discrepancy::CriticNetwork;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::measures::{check_order, EmpiricalDistribution};
use crate::seeding::{self, streams};
use crate::transport::wasserstein_exact;

/// Evaluation batch size (real and fake).
pub const EVAL_SAMPLES: usize = 512;
/// W1 oracle subsample size; 100×100 sits exactly at the exact-solver guard.
pub const EVAL_SUBSAMPLE: usize = 100;
/// Number of averaged subsample draws per evaluation.
pub const EVAL_DRAWS: usize = 5;

fn default_widths() -> Vec<usize> {
    vec![128, 128, 128]
}

fn default_z_dim() -> usize {
    16
}

fn default_n_dis() -> usize {
    5
}

fn default_batch() -> usize {
    64
}

fn default_eval_every() -> usize {
    500
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Noise vector length. The desk-scale default is 16; 2D targets do not
    /// need more.
    #[serde(default = "default_z_dim")]
    pub z_dim: usize,
    #[serde(default = "default_widths")]
    pub hidden: Vec<usize>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            z_dim: default_z_dim(),
            hidden: default_widths(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticSpec {
    #[serde(default = "default_widths")]
    pub hidden: Vec<usize>,
}

impl Default for CriticSpec {
    fn default() -> Self {
        CriticSpec {
            hidden: default_widths(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: DatasetSpec,
    pub p: f64,
    /// Critic output dimension.
    pub n: usize,
    /// Lipschitz budget K.
    pub k_lip: f64,
    #[serde(default)]
    pub srvt: bool,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub critic: CriticSpec,
    /// Discriminator steps per generator step.
    #[serde(default = "default_n_dis")]
    pub n_dis: usize,
    /// Total generator steps.
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamHyper,
    /// R1 penalty weight on real batches; 0 disables the penalty.
    #[serde(default)]
    pub r1_gamma: f64,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Master seed for the run. All training and evaluation draws derive
    /// from it; `dataset.seed` only seeds standalone `sample_dataset` calls.
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if !(self.dataset.noise_std > 0.0) {
            return Err(Error::InvalidConfig(
                "training requires noise_std > 0 (the coverage radius is 3·noise_std)".into(),
            ));
        }
        check_order(self.p)?;
        if self.n < 1 {
            return Err(Error::InvalidConfig(
                "critic output dimension must be >= 1".into(),
            ));
        }
        if !(self.k_lip > 0.0) {
            return Err(Error::InvalidConfig("Lipschitz budget K must be > 0".into()));
        }
        if self.generator.z_dim < 1 {
            return Err(Error::InvalidConfig("noise dimension must be >= 1".into()));
        }
        if self.n_dis < 1
            || self.steps < 1
            || self.batch_size < 1
            || self.eval_every < 1
        {
            return Err(Error::InvalidConfig(
                "n_dis, steps, batch_size, and eval_every must be >= 1".into(),
            ));
        }
        if self.generator.hidden.iter().any(|&w| w == 0)
            || self.critic.hidden.iter().any(|&w| w == 0)
        {
            return Err(Error::InvalidConfig("layer widths must be >= 1".into()));
        }
        if !(self.r1_gamma >= 0.0) || !self.r1_gamma.is_finite() {
            return Err(Error::InvalidConfig("r1_gamma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// One evaluation row. `seconds` is fixed at 0.0 so the record sequence and
/// the emitted metrics.csv are bit-reproducible; wall time is reported on
/// stderr while a run is in flight.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: usize,
    /// Critic objective on the 512 vs 512 evaluation batches.
    pub objective: f64,
    /// Exact W1 between subsampled evaluation batches, averaged over draws.
    pub w1: f64,
    /// Centers with at least one fake sample within 3·noise_std.
    pub modes: usize,
    /// Fraction of fake samples within 3·noise_std of any center.
    pub hq_frac: f64,
    pub seconds: f64,
}

impl MetricsRecord {
    pub fn csv_header() -> &'static str {
        "step,objective,w1,modes,hq_frac,seconds"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.objective, self.w1, self.modes, self.hq_frac, self.seconds
        )
    }
}

/// The alternating-update state: generator, critic, their optimizers, and
/// the run's random streams.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub generator: DenseNet,
    pub critic: CriticNetwork,
    adam_gen: AdamState,
    adam_critic: AdamState,
    rng_real: ChaCha8Rng,
    rng_noise: ChaCha8Rng,
    rng_eval: ChaCha8Rng,
    centers: Vec<[f64; 2]>,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Trainer> {
        cfg.validate()?;
        let mut gen_sizes = Vec::with_capacity(cfg.generator.hidden.len() + 2);
        gen_sizes.push(cfg.generator.z_dim);
        gen_sizes.extend_from_slice(&cfg.generator.hidden);
        gen_sizes.push(2);
        let generator = DenseNet::init(&gen_sizes, cfg.seed, streams::INIT_GEN);
        let critic = CriticNetwork::init(
            2,
            &cfg.critic.hidden,
            cfg.n,
            cfg.k_lip,
            cfg.srvt,
            cfg.seed,
            streams::INIT_CRITIC,
        );
        let adam_gen = AdamState::new(cfg.adam, generator.param_count());
        let adam_critic = AdamState::new(cfg.adam, critic.net.param_count());
        let centers = cfg.dataset.centers();
        Ok(Trainer {
            rng_real: seeding::stream(cfg.seed, streams::DATA_REAL),
            rng_noise: seeding::stream(cfg.seed, streams::DATA_NOISE),
            rng_eval: seeding::stream(cfg.seed, streams::EVAL),
            adam_gen,
            adam_critic,
            generator,
            critic,
            centers,
            cfg,
        })
    }

    /// Draw a real minibatch from the target mixture.
    pub fn draw_real(&mut self) -> Matrix {
        dataset::mixture_matrix(
            &self.centers,
            self.cfg.dataset.noise_std,
            self.cfg.batch_size,
            &mut self.rng_real,
        )
    }

    fn noise_matrix(rows: usize, z_dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let mut data = Vec::with_capacity(rows * z_dim);
        for _ in 0..rows * z_dim {
            let z: f64 = rng.sample(StandardNormal);
            data.push(z);
        }
        Matrix {
            rows,
            cols: z_dim,
            data,
        }
    }

    /// One ascent step of the critic on a real batch against a fresh fake
    /// batch. Returns the critic objective on the step's batches (without
    /// the R1 term, which only shapes the gradient). Spectral normalization
    /// re-projects the weights after the step; a step that did not move the
    /// weights (e.g. zero learning rate) leaves the critic untouched.
    pub fn discriminator_step(&mut self, real: &Matrix) -> f64 {
        let batch = real.rows;
        let z = Self::noise_matrix(batch, self.cfg.generator.z_dim, &mut self.rng_noise);
        let fake = self.generator.forward_batch(&z);
        let w_real = vec![1.0 / batch as f64; batch];
        let w_fake = vec![1.0 / fake.rows as f64; fake.rows];

        let mut tape = Tape::new();
        let x = tape.leaf(real.rows, real.cols, real.data.clone(), false);
        let y = tape.leaf(fake.rows, fake.cols, fake.data.clone(), false);
        let fwd_real = self.critic.forward_nodes(&mut tape, x, true);
        let fwd_fake = self.critic.forward_nodes(&mut tape, y, true);
        let term_real = self
            .critic
            .term_from_forward(&mut tape, fwd_real.out, &w_real, self.cfg.p);
        let term_fake = self
            .critic
            .term_from_forward(&mut tape, fwd_fake.out, &w_fake, self.cfg.p);
        let mut obj = tape.sub(term_real, term_fake);
        let objective = tape.scalar(obj);
        if self.cfg.r1_gamma > 0.0 {
            let gsq = self.critic.input_grad_sq_on_tape(&mut tape, &fwd_real);
            let pen = tape.weighted_mean(gsq, w_real.clone());
            let weighted = tape.scale(pen, 0.5 * self.cfg.r1_gamma);
            obj = tape.sub(obj, weighted);
        }

        let grads = tape.backward(obj);
        let mut flat = self.critic.net.flatten_grads(&grads, &fwd_real.handles);
        let flat_fake = self.critic.net.flatten_grads(&grads, &fwd_fake.handles);
        for (g, gy) in flat.iter_mut().zip(&flat_fake) {
            // Ascend: Adam minimizes, so feed the negated gradient.
            *g = -(*g + gy);
        }
        let mut params = self.critic.net.flatten_params();
        let before = params.clone();
        self.adam_critic.step(&mut params, &flat);
        if params != before {
            self.critic.net.load_params(&params);
            self.critic.normalize_train();
        }
        objective
    }

    /// One descent step of the generator on −(mean‖D(G(z))‖^p)^(1/p) with the
    /// critic frozen. Returns the loss.
    pub fn generator_step(&mut self) -> f64 {
        let batch = self.cfg.batch_size;
        let z = Self::noise_matrix(batch, self.cfg.generator.z_dim, &mut self.rng_noise);
        let w = vec![1.0 / batch as f64; batch];

        let mut tape = Tape::new();
        let zn = tape.leaf(z.rows, z.cols, z.data.clone(), false);
        let (fake, gen_handles) = self.generator.forward_on_tape(&mut tape, zn, true);
        let fwd = self.critic.forward_nodes(&mut tape, fake, false);
        let term = self
            .critic
            .term_from_forward(&mut tape, fwd.out, &w, self.cfg.p);
        let loss_node = tape.scale(term, -1.0);
        let loss = tape.scalar(loss_node);

        let grads = tape.backward(loss_node);
        let flat = self.generator.flatten_grads(&grads, &gen_handles);
        let mut params = self.generator.flatten_params();
        let before = params.clone();
        self.adam_gen.step(&mut params, &flat);
        if params != before {
            self.generator.load_params(&params);
        }
        loss
    }

    /// Oracle evaluation at a generator step: critic objective on 512 vs 512
    /// fresh batches, exact W1 averaged over subsample draws, mode coverage,
    /// and the certified Lipschitz check. Returns the record plus the real
    /// and fake evaluation batches, so callers can recompute the objective
    /// independently and write the samples artifact.
    pub fn evaluate(&mut self, step: usize) -> Result<(MetricsRecord, Matrix, Matrix)> {
        let real_m = dataset::mixture_matrix(
            &self.centers,
            self.cfg.dataset.noise_std,
            EVAL_SAMPLES,
            &mut self.rng_eval,
        );
        let z = Self::noise_matrix(EVAL_SAMPLES, self.cfg.generator.z_dim, &mut self.rng_eval);
        let fake_m = self.generator.forward_batch(&z);

        let objective =
            crate::discrepancy::critic_objective(&self.critic, &real_m, &fake_m, self.cfg.p)?;

        // The certified contract must hold at every checkpoint; measure on a
        // clone so the 100-iteration refinement cannot feed back into the
        // warm-started training estimates.
        let sigmas = self.critic.net.clone().certified_sigmas();
        for (l, s) in sigmas.iter().enumerate() {
            assert!(
                *s <= 1.0 + 1e-3,
                "certified sigma {s} of layer {l} exceeds the Lipschitz contract"
            );
        }

        let uniform = vec![1.0 / EVAL_SAMPLES as f64; EVAL_SAMPLES];
        let real_d =
            EmpiricalDistribution::from_flat(real_m.data.clone(), uniform.clone(), 2);
        let fake_d = EmpiricalDistribution::from_flat(fake_m.data.clone(), uniform, 2);

        // 512×512 exceeds the exact-solver guard, so W1 is averaged over
        // EVAL_DRAWS subsample pairs that sit exactly at the guard.
        let mut w1_sum = 0.0;
        for _ in 0..EVAL_DRAWS {
            let sub_real = subsample(&real_d, EVAL_SUBSAMPLE, &mut self.rng_eval);
            let sub_fake = subsample(&fake_d, EVAL_SUBSAMPLE, &mut self.rng_eval);
            let (value, _) = wasserstein_exact(&sub_real, &sub_fake, 1.0)?;
            w1_sum += value;
        }
        let w1 = w1_sum / EVAL_DRAWS as f64;

        let radius = 3.0 * self.cfg.dataset.noise_std;
        let (modes, hq_frac) = mode_coverage(&fake_d, &self.centers, radius);

        Ok((
            MetricsRecord {
                step,
                objective,
                w1,
                modes,
                hq_frac,
                seconds: 0.0,
            },
            real_m,
            fake_m,
        ))
    }
}

fn subsample(
    d: &EmpiricalDistribution,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> EmpiricalDistribution {
    let idx = rand::seq::index::sample(rng, d.len(), k);
    let mut points = Vec::with_capacity(k * d.dim());
    for i in idx.iter() {
        points.extend_from_slice(d.point(i));
    }
    EmpiricalDistribution::from_flat(points, vec![1.0 / k as f64; k], d.dim())
}

/// Everything a finished run hands back in memory.
pub struct TrainOutput {
    pub records: Vec<MetricsRecord>,
    pub generator: DenseNet,
    pub critic: CriticNetwork,
}

fn write_samples(path: &Path, samples: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "x1,x2")?;
    for row in samples.data.chunks_exact(samples.cols) {
        writeln!(w, "{},{}", row[0], row[1])?;
    }
    w.flush()?;
    Ok(())
}

/// Run the full alternating loop: `n_dis` discriminator steps per generator
/// step, an oracle evaluation every `eval_every` generator steps (plus step
/// 0 and the final step), and — when `out_dir` is given — metrics.csv,
/// samples_<step>.csv per evaluation, and a final checkpoint.bin holding
/// both networks.
pub fn train(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainOutput> {
    let start = Instant::now();
    let mut tr = Trainer::new(cfg.clone())?;

    let mut metrics = match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            // Config echo lets `report` group runs without guessing from
            // directory names.
            let mut echo = serde_json::to_string_pretty(cfg)?;
            echo.push('\n');
            fs::write(dir.join("config.json"), echo)?;
            let mut f = BufWriter::new(fs::File::create(dir.join("metrics.csv"))?);
            writeln!(f, "{}", MetricsRecord::csv_header())?;
            Some(f)
        }
        None => None,
    };

    let mut records = Vec::new();
    let log_eval = |tr: &mut Trainer,
                        step: usize,
                        records: &mut Vec<MetricsRecord>,
                        metrics: &mut Option<BufWriter<fs::File>>|
     -> Result<()> {
        let (rec, _real, fake) = tr.evaluate(step)?;
        if let Some(f) = metrics.as_mut() {
            writeln!(f, "{}", rec.csv_row())?;
            f.flush()?;
        }
        if let Some(dir) = out_dir {
            write_samples(&dir.join(format!("samples_{step}.csv")), &fake)?;
        }
        eprintln!(
            "step {:>6}  objective {:+.6}  w1 {:.4}  modes {:>2}  hq {:.3}  [{:.1}s]",
            rec.step,
            rec.objective,
            rec.w1,
            rec.modes,
            rec.hq_frac,
            start.elapsed().as_secs_f64()
        );
        records.push(rec);
        Ok(())
    };

    log_eval(&mut tr, 0, &mut records, &mut metrics)?;
    for gstep in 1..=cfg.steps {
        for _ in 0..cfg.n_dis {
            let real = tr.draw_real();
            tr.discriminator_step(&real);
        }
        tr.generator_step();
        if gstep % cfg.eval_every == 0 || gstep == cfg.steps {
            log_eval(&mut tr, gstep, &mut records, &mut metrics)?;
        }
    }
    drop(metrics);

    if let Some(dir) = out_dir {
        let mut critic_meta = net_meta("critic", &tr.critic.net);
        critic_meta.k_lip = Some(tr.critic.k_lip);
        critic_meta.srvt = Some(tr.critic.srvt);
        critic_meta.srvt_eps = Some(tr.critic.srvt_eps);
        critic_meta.pad_to = Some(tr.critic.pad_to);
        let meta = CheckpointMeta {
            format: FORMAT_TAG.to_string(),
            step: cfg.steps as u64,
            param_count: tr.generator.param_count() + tr.critic.net.param_count(),
            nets: vec![net_meta("generator", &tr.generator), critic_meta],
        };
        let mut params = tr.generator.flatten_params();
        params.extend(tr.critic.net.flatten_params());
        write_checkpoint(&dir.join("checkpoint.bin"), &meta, &params)?;
    }

    Ok(TrainOutput {
        records,
        generator: tr.generator,
        critic: tr.critic,
    })
}
