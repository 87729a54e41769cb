//! Exact t-SNE.
//!
//! High-dimensional affinities come from perplexity-calibrated Gaussian
//! kernels, low-dimensional ones from a Student-t kernel, and the embedding
//! follows momentum gradient descent on their KL divergence with early
//! exaggeration and per-coordinate adaptive gains. Everything is O(N²).

mod affinity;
mod io;
mod pca;
mod step;

use ndarray::{Array2, Axis};
use thiserror::Error;

use crate::kv::{parse_kv, parse_value, KvError};
use crate::patchio::Label;
use crate::rng::{fill_standard_normal, seeded};

pub use affinity::{
    conditional_matrix, conditional_probs, joint_probs, kl_divergence, low_dim_affinities, pairwise_sq_dists,
    symmetrize, tsne_gradient, LowDimAffinities, ENTROPY_TOLERANCE_BITS, MAX_BISECTION_STEPS, MAX_BRACKET_WIDENINGS,
    PROB_FLOOR,
};
pub use io::{read_labels, LabelError};
pub use pca::pca_reduce;

#[derive(Debug, Error, PartialEq)]
pub enum TsneError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("non-finite input value in row {row}")]
    NonFiniteInput { row: usize },
    #[error("could not calibrate row {row} to perplexity {perplexity}")]
    Calibration { row: usize, perplexity: f64 },
    #[error("embedding diverged at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error(transparent)]
    Kv(#[from] KvError),
}

pub type Result<T, E = TsneError> = std::result::Result<T, E>;

/// Standard deviation of the random initial embedding.
pub const INIT_STD: f64 = 1e-4;
const GAIN_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration_factor: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub rng_seed: u64,
    /// Project inputs onto this many principal components first.
    pub pca_components: Option<usize>,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 250.0,
            iterations: 4000,
            early_exaggeration_factor: 4.0,
            exaggeration_iters: 100,
            learning_rate: 100.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            rng_seed: 0,
            pca_components: None,
        }
    }
}

impl TsneConfig {
    /// Checks the configuration against a dataset of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        let fail = |msg: String| Err(TsneError::Config(msg));
        if n < 4 {
            return fail(format!("t-SNE needs at least 4 points, got {n}"));
        }
        if !(self.perplexity >= 1.0 && self.perplexity <= (n - 1) as f64) {
            return fail(format!("perplexity {} must lie in [1, {}] for {n} points", self.perplexity, n - 1));
        }
        if self.iterations < self.exaggeration_iters {
            return fail(format!(
                "iterations ({}) must be at least exaggeration_iters ({})",
                self.iterations, self.exaggeration_iters
            ));
        }
        for (name, m) in [("momentum_initial", self.momentum_initial), ("momentum_final", self.momentum_final)] {
            if !(0.0..1.0).contains(&m) {
                return fail(format!("{name} must lie in [0, 1), got {m}"));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.early_exaggeration_factor > 0.0 && self.early_exaggeration_factor.is_finite()) {
            return fail("early_exaggeration_factor must be positive".into());
        }
        if self.pca_components == Some(0) {
            return fail("pca_components must be at least 1".into());
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv(text)? {
            let v = value.as_str();
            match key.as_str() {
                "perplexity" => self.perplexity = parse_value(&key, v)?,
                "iterations" => self.iterations = parse_value(&key, v)?,
                "early_exaggeration_factor" => self.early_exaggeration_factor = parse_value(&key, v)?,
                "exaggeration_iters" => self.exaggeration_iters = parse_value(&key, v)?,
                "learning_rate" => self.learning_rate = parse_value(&key, v)?,
                "momentum_initial" => self.momentum_initial = parse_value(&key, v)?,
                "momentum_final" => self.momentum_final = parse_value(&key, v)?,
                "momentum_switch_iter" => self.momentum_switch_iter = parse_value(&key, v)?,
                "rng_seed" => self.rng_seed = parse_value(&key, v)?,
                "pca_components" => {
                    self.pca_components = match v {
                        "" | "none" => None,
                        _ => Some(parse_value(&key, v)?),
                    }
                }
                _ => return Err(KvError::UnknownKey(key).into()),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `N × 2` coordinates.
    pub points: Array2<f64>,
    pub labels: Vec<Label>,
    /// KL divergence against the un-exaggerated affinities after each
    /// iteration's update.
    pub kl_trace: Vec<f64>,
}

impl Embedding {
    pub fn with_labels(mut self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.points.nrows() {
            return Err(TsneError::Config(format!("{} labels for {} points", labels.len(), self.points.nrows())));
        }
        self.labels = labels;
        Ok(self)
    }
}

/// Joint affinities of the (optionally PCA-reduced) input.
pub fn input_affinities(x: &Array2<f64>, cfg: &TsneConfig) -> Result<Array2<f64>> {
    cfg.validate(x.nrows())?;
    let reduced;
    let data = match cfg.pca_components {
        Some(k) if k < x.ncols() => {
            reduced = pca_reduce(x, k, cfg.rng_seed);
            &reduced
        }
        _ => x,
    };
    let d = pairwise_sq_dists(data)?;
    Ok(joint_probs(&conditional_matrix(&d, cfg.perplexity)?))
}

pub fn random_init(n: usize, seed: u64) -> Array2<f64> {
    let mut values = vec![0.0; n * 2];
    fill_standard_normal(&mut seeded(seed), &mut values);
    Array2::from_shape_vec((n, 2), values).expect("n*2 values") * INIT_STD
}

/// Embeds the rows of `x` in 2-D. Labels default to
/// [`Label::Unlabeled`]; attach real ones with [`Embedding::with_labels`].
pub fn run_tsne(x: &Array2<f64>, cfg: &TsneConfig) -> Result<Embedding> {
    let p = input_affinities(x, cfg)?;
    optimize(&p, random_init(x.nrows(), cfg.rng_seed), cfg)
}

/// As [`run_tsne`] but starting from a caller-supplied `N × 2`
/// configuration.
pub fn run_tsne_from(x: &Array2<f64>, cfg: &TsneConfig, init: Array2<f64>) -> Result<Embedding> {
    if init.dim() != (x.nrows(), 2) {
        return Err(TsneError::Config(format!("initial embedding is {:?}, expected ({}, 2)", init.dim(), x.nrows())));
    }
    let p = input_affinities(x, cfg)?;
    optimize(&p, init, cfg)
}

fn recentre(y: &mut Array2<f64>) {
    let mean = y.mean_axis(Axis(0)).expect("non-empty");
    *y -= &mean;
}

/// Momentum gradient descent from `y` on joint affinities `p`.
pub fn optimize(p: &Array2<f64>, y: Array2<f64>, cfg: &TsneConfig) -> Result<Embedding> {
    let n = p.nrows();
    cfg.validate(n)?;
    let exaggerated = p * cfg.early_exaggeration_factor;
    let mut velocity = Array2::<f64>::zeros(y.raw_dim());
    let mut gains = Array2::<f64>::ones(y.raw_dim());
    let mut kl_trace = Vec::with_capacity(cfg.iterations);
    let p = p.as_standard_layout();
    let exaggerated = exaggerated.as_standard_layout();
    let mut y = y.as_standard_layout().into_owned();
    let dims = y.ncols();
    let mut workspace = step::Workspace::new(n, dims);
    workspace.refresh(y.as_slice().expect("standard layout"));
    let mut grad = Array2::<f64>::zeros((n, dims));

    for iteration in 0..cfg.iterations {
        let target = if iteration < cfg.exaggeration_iters { &exaggerated } else { &p };
        let momentum = if iteration < cfg.momentum_switch_iter { cfg.momentum_initial } else { cfg.momentum_final };
        workspace.gradient(
            target.as_slice().expect("standard layout"),
            y.as_slice().expect("standard layout"),
            grad.as_slice_mut().expect("standard layout"),
        );
        ndarray::Zip::from(&mut gains).and(&mut velocity).and(&grad).for_each(|gain, vel, &g| {
            // Grow the step while the gradient keeps pointing against
            // the direction of travel.
            *gain = if (g > 0.0) != (*vel > 0.0) { *gain * 1.2 } else { *gain * 0.8 };
            *gain = gain.max(GAIN_FLOOR);
            *vel = momentum * *vel - cfg.learning_rate * *gain * g;
        });
        y += &velocity;
        recentre(&mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TsneError::Divergence { iteration });
        }
        workspace.refresh(y.as_slice().expect("standard layout"));
        kl_trace.push(workspace.kl(p.as_slice().expect("standard layout")));
    }
    Ok(Embedding { points: y, labels: vec![Label::Unlabeled; n], kl_trace })
}
