//! Toy-scale adversarial trainer.
//!
//! A fully-connected generator maps standard-normal latent vectors to
//! samples in `[0, 1]`; a fully-connected discriminator scores samples in
//! `(0, 1)` with real = 1 and fake = 0. Both are trained with plain SGD on
//! explicitly backpropagated gradients: the discriminator on binary
//! cross-entropy, the generator on the non-saturating loss
//! `-mean log D(G(z))`.

mod checkpoint;
mod gradcheck;
mod mlp;
mod source;

use std::fmt::Write as _;

use ndarray::Array2;
use rand::Rng;
use thiserror::Error;

use crate::kv::{parse_kv, parse_value, KvError};
use crate::rng::{fill_standard_normal, seeded};

pub use checkpoint::{load_checkpoint, save_checkpoint, GanCheckpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{gradient_check, gradient_check_sampled};
pub use mlp::{sigmoid, softplus, Activation, Dense, ForwardTrace, MlpGrads, MlpParams};
pub use source::{DatasetSource, GaussianMixture2d, RealSource};

#[derive(Debug, Error, PartialEq)]
pub enum GanError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite {what} at training step {step}")]
    NonFinite { step: usize, what: &'static str },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Kv(#[from] KvError),
}

pub type Result<T, E = GanError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub batch_size: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub learning_rate: f64,
    pub steps: usize,
    pub rng_seed: u64,
}

impl Default for GanConfig {
    /// Defaults reach the two-component toy mixture (see
    /// [`GaussianMixture2d::default`]) in about 10k steps.
    fn default() -> Self {
        GanConfig {
            latent_dim: 200,
            batch_size: 64,
            generator_hidden: vec![32],
            discriminator_hidden: vec![32],
            learning_rate: 0.1,
            steps: 10_000,
            rng_seed: 7,
        }
    }
}

fn parse_widths(key: &str, value: &str) -> Result<Vec<usize>, KvError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|w| parse_value(key, w.trim())).collect()
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.batch_size == 0 {
            return Err(GanError::Config("latent_dim and batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GanError::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.generator_hidden.iter().chain(&self.discriminator_hidden).any(|&w| w == 0) {
            return Err(GanError::Config("hidden layer widths must be at least 1".into()));
        }
        Ok(())
    }

    /// Overrides fields from `key = value` text. Widths are comma lists.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv(text)? {
            let v = value.as_str();
            match key.as_str() {
                "latent_dim" => self.latent_dim = parse_value(&key, v)?,
                "batch_size" => self.batch_size = parse_value(&key, v)?,
                "generator_hidden" => self.generator_hidden = parse_widths(&key, v)?,
                "discriminator_hidden" => self.discriminator_hidden = parse_widths(&key, v)?,
                "learning_rate" => self.learning_rate = parse_value(&key, v)?,
                "steps" => self.steps = parse_value(&key, v)?,
                "rng_seed" => self.rng_seed = parse_value(&key, v)?,
                _ => return Err(KvError::UnknownKey(key).into()),
            }
        }
        Ok(())
    }

    fn generator_dims(&self, data_dim: usize) -> Vec<usize> {
        std::iter::once(self.latent_dim)
            .chain(self.generator_hidden.iter().copied())
            .chain(std::iter::once(data_dim))
            .collect()
    }

    fn discriminator_dims(&self, data_dim: usize) -> Vec<usize> {
        std::iter::once(data_dim).chain(self.discriminator_hidden.iter().copied()).chain(std::iter::once(1)).collect()
    }
}

/// `n × dim` matrix of i.i.d. standard normal draws.
pub fn sample_latent(rng: &mut impl Rng, n: usize, dim: usize) -> Array2<f64> {
    let mut data = vec![0.0; n * dim];
    fill_standard_normal(rng, &mut data);
    Array2::from_shape_vec((n, dim), data).expect("shape matches length")
}

pub fn generator_forward(g: &MlpParams, z: &Array2<f64>) -> Result<Array2<f64>> {
    g.forward(z)
}

/// Keeps reported probabilities strictly inside (0, 1) when the logit
/// saturates in double precision.
const PROB_MARGIN: f64 = 1e-15;

/// Probability that each row is real.
pub fn discriminator_forward(d: &MlpParams, x: &Array2<f64>) -> Result<Vec<f64>> {
    let trace = d.forward_trace(x)?;
    Ok(trace.last_pre().column(0).iter().map(|&l| sigmoid(l).clamp(PROB_MARGIN, 1.0 - PROB_MARGIN)).collect())
}

/// Discriminator BCE `-[mean log D(real) + mean log(1 - D(fake))]` and its
/// gradient with respect to the discriminator parameters. Computed from
/// logits so saturated outputs stay finite.
pub fn discriminator_loss(d: &MlpParams, real: &Array2<f64>, fake: &Array2<f64>) -> Result<(f64, MlpGrads)> {
    let real_trace = d.forward_trace(real)?;
    let fake_trace = d.forward_trace(fake)?;
    let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
    let lr = real_trace.last_pre();
    let lf = fake_trace.last_pre();
    let loss = lr.iter().map(|&l| softplus(-l)).sum::<f64>() / nr + lf.iter().map(|&l| softplus(l)).sum::<f64>() / nf;
    let delta_real = lr.mapv(|l| (sigmoid(l) - 1.0) / nr);
    let delta_fake = lf.mapv(|l| sigmoid(l) / nf);
    let (mut grads, _) = d.backward_from_pre(&real_trace, delta_real);
    let (fake_grads, _) = d.backward_from_pre(&fake_trace, delta_fake);
    grads.add_assign(&fake_grads);
    Ok((loss, grads))
}

/// Gradients of the non-saturating generator loss.
#[derive(Debug, Clone)]
pub struct GeneratorLoss {
    pub loss: f64,
    pub generator: MlpGrads,
    /// Gradient of the same loss with respect to the discriminator; not
    /// used for training but checked against finite differences.
    pub discriminator: MlpGrads,
}

/// `-mean log D(G(z))` and its gradients through both networks.
pub fn generator_loss(g: &MlpParams, d: &MlpParams, z: &Array2<f64>) -> Result<GeneratorLoss> {
    let g_trace = g.forward_trace(z)?;
    let d_trace = d.forward_trace(g_trace.output())?;
    let n = z.nrows() as f64;
    let logits = d_trace.last_pre();
    let loss = logits.iter().map(|&l| softplus(-l)).sum::<f64>() / n;
    let delta = logits.mapv(|l| (sigmoid(l) - 1.0) / n);
    let (d_grads, d_fake) = d.backward_from_pre(&d_trace, delta);
    let (g_grads, _) = g.backward_from_output(&g_trace, d_fake);
    Ok(GeneratorLoss { loss, generator: g_grads, discriminator: d_grads })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub d_loss: f64,
    pub g_loss: f64,
    pub d_real_mean: f64,
    pub d_fake_mean: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub entries: Vec<TraceEntry>,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,d_loss,g_loss,d_real_mean,d_fake_mean\n");
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(out, "{i},{},{},{},{}", e.d_loss, e.g_loss, e.d_real_mean, e.d_fake_mean)
                .expect("writing to a String");
        }
        out
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// One adversarial round: a discriminator SGD step on a fresh fake batch,
/// then a generator SGD step on another fresh latent batch scored by the
/// updated discriminator. Loss values are those before each update.
pub fn gan_train_step(
    g: &mut MlpParams,
    d: &mut MlpParams,
    real_batch: &Array2<f64>,
    cfg: &GanConfig,
    rng: &mut impl Rng,
    step: usize,
) -> Result<TraceEntry> {
    if real_batch.nrows() != cfg.batch_size {
        return Err(GanError::Config(format!(
            "real batch has {} rows, batch_size is {}",
            real_batch.nrows(),
            cfg.batch_size
        )));
    }
    let z = sample_latent(rng, cfg.batch_size, cfg.latent_dim);
    let fake = g.forward(&z)?;
    let d_real_mean = mean(discriminator_forward(d, real_batch)?.into_iter());
    let d_fake_mean = mean(discriminator_forward(d, &fake)?.into_iter());
    let (d_loss, d_grads) = discriminator_loss(d, real_batch, &fake)?;
    if !d_loss.is_finite() {
        return Err(GanError::NonFinite { step, what: "discriminator loss" });
    }
    d.sgd_step(&d_grads, cfg.learning_rate);

    let z = sample_latent(rng, cfg.batch_size, cfg.latent_dim);
    let gl = generator_loss(g, d, &z)?;
    if !gl.loss.is_finite() {
        return Err(GanError::NonFinite { step, what: "generator loss" });
    }
    g.sgd_step(&gl.generator, cfg.learning_rate);
    if !g.is_finite() || !d.is_finite() {
        return Err(GanError::NonFinite { step, what: "parameters" });
    }
    Ok(TraceEntry { d_loss, g_loss: gl.loss, d_real_mean, d_fake_mean })
}

/// Generator and discriminator with the shape of the data they model.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: MlpParams,
    pub discriminator: MlpParams,
}

impl GanModel {
    pub fn init(cfg: &GanConfig, data_dim: usize, rng: &mut impl Rng) -> Result<Self> {
        cfg.validate()?;
        Ok(GanModel {
            generator: MlpParams::init(&cfg.generator_dims(data_dim), Activation::TanhUnit, rng)?,
            discriminator: MlpParams::init(&cfg.discriminator_dims(data_dim), Activation::Sigmoid, rng)?,
        })
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<Array2<f64>> {
        let z = sample_latent(rng, n, self.generator.input_dim());
        generator_forward(&self.generator, &z)
    }
}

/// Runs `cfg.steps` training rounds from a seeded initialisation.
/// Identical config and source give a bitwise-identical trace.
pub fn train(cfg: &GanConfig, source: &mut dyn RealSource) -> Result<(GanModel, TrainTrace)> {
    cfg.validate()?;
    let mut rng = seeded(cfg.rng_seed);
    let mut model = GanModel::init(cfg, source.dim(), &mut rng)?;
    let mut trace = TrainTrace::default();
    for step in 0..cfg.steps {
        let real = source.sample_batch(cfg.batch_size, &mut rng);
        let entry = gan_train_step(&mut model.generator, &mut model.discriminator, &real, cfg, &mut rng, step)?;
        trace.entries.push(entry);
    }
    Ok((model, trace))
}
