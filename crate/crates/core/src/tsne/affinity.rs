//! Affinity matrices, the KL objective and its gradient.
//!
//! Row computations run in parallel, but every reduction over a row is
//! sequential and row totals are combined in index order, so results are
//! bitwise identical for any thread count.

use ndarray::{Array2, Axis};
use rayon::prelude::*;

use super::{Result, TsneError};

/// Floor applied to joint and low-dimensional affinities.
pub const PROB_FLOOR: f64 = 1e-12;

/// Bisection stops once the row entropy is within this many bits of the
/// target.
pub const ENTROPY_TOLERANCE_BITS: f64 = 1e-10;
pub const MAX_BISECTION_STEPS: usize = 50;
pub const MAX_BRACKET_WIDENINGS: usize = 64;

/// Squared Euclidean distances, each pair evaluated once as
/// `Σ (x_i - x_j)²` and mirrored, so the result is exactly symmetric.
pub fn pairwise_sq_dists(x: &Array2<f64>) -> Result<Array2<f64>> {
    let n = x.nrows();
    if n < 2 {
        return Err(TsneError::Config(format!("need at least 2 points, got {n}")));
    }
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(TsneError::NonFiniteInput { row: pos / x.ncols().max(1) });
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (i + 1..n).map(|j| xi.iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum()).collect()
        })
        .collect();
    let mut d = Array2::zeros((n, n));
    for (i, row) in upper.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(d)
}

/// Row probabilities `∝ exp(-beta * shifted)` and their entropy in bits.
fn row_at(shifted: &[f64], beta: f64) -> (Vec<f64>, f64) {
    let weights: Vec<f64> = shifted.iter().map(|&d| (-beta * d).exp()).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let entropy = -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>();
    (probs, entropy)
}

/// Gaussian conditional affinities of one point to the `N-1` others,
/// calibrated so that `2^entropy` equals `perplexity`. Returns the
/// probabilities (summing to 1) and the kernel width σ.
///
/// The precision `β = 1/(2σ²)` is first bracketed by repeated doubling or
/// halving, then bisected in log space.
pub fn conditional_probs(dist_row: &[f64], perplexity: f64) -> Result<(Vec<f64>, f64)> {
    calibrate(dist_row, perplexity).map_err(|()| TsneError::Calibration { row: 0, perplexity })
}

pub(crate) fn calibrate(dist_row: &[f64], perplexity: f64) -> Result<(Vec<f64>, f64), ()> {
    let k = dist_row.len();
    if k == 0 || !(1.0..=k as f64).contains(&perplexity) || dist_row.iter().any(|d| !d.is_finite()) {
        return Err(());
    }
    // Shifting by the minimum leaves the normalised row unchanged and keeps
    // the nearest neighbour's weight at 1, so the sum never underflows.
    let dmin = dist_row.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = dist_row.iter().map(|d| d - dmin).collect();
    let target = perplexity.log2();
    let sigma = |beta: f64| (1.0 / (2.0 * beta)).sqrt();

    let mut beta = 1.0;
    let (probs, h) = row_at(&shifted, beta);
    if (h - target).abs() < ENTROPY_TOLERANCE_BITS {
        return Ok((probs, sigma(beta)));
    }
    // Entropy falls as beta grows.
    let grow = h > target;
    let (mut lo, mut hi) = (beta, beta);
    let mut bracketed = false;
    for _ in 0..MAX_BRACKET_WIDENINGS {
        let next = if grow { beta * 2.0 } else { beta / 2.0 };
        let (probs, h) = row_at(&shifted, next);
        if (h - target).abs() < ENTROPY_TOLERANCE_BITS {
            return Ok((probs, sigma(next)));
        }
        if (h > target) != grow {
            (lo, hi) = if grow { (beta, next) } else { (next, beta) };
            bracketed = true;
            break;
        }
        beta = next;
    }
    if !bracketed {
        return Err(());
    }
    let (mut log_lo, mut log_hi) = (lo.ln(), hi.ln());
    let mut best = (f64::INFINITY, Vec::new(), beta);
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (log_lo + log_hi);
        let beta = mid.exp();
        let (probs, h) = row_at(&shifted, beta);
        let gap = (h - target).abs();
        if gap < best.0 {
            best = (gap, probs, beta);
        }
        if gap < ENTROPY_TOLERANCE_BITS {
            break;
        }
        if h > target {
            log_lo = mid;
        } else {
            log_hi = mid;
        }
    }
    let (_, probs, beta) = best;
    Ok((probs, sigma(beta)))
}

/// Calibrated conditional matrix `p_{j|i}` (row `i`), zero diagonal.
pub fn conditional_matrix(sq_dists: &Array2<f64>, perplexity: f64) -> Result<Array2<f64>> {
    let n = sq_dists.nrows();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = sq_dists.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).collect();
            calibrate(&row, perplexity).map(|(p, _)| p).map_err(|()| TsneError::Calibration { row: i, perplexity })
        })
        .collect();
    let mut out = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        let probs = row?;
        let mut it = probs.into_iter();
        for j in (0..n).filter(|&j| j != i) {
            out[[i, j]] = it.next().expect("n-1 values");
        }
    }
    Ok(out)
}

/// `(p_{j|i} + p_{i|j}) / 2N` without flooring; sums to 1 when every
/// conditional row does.
pub fn symmetrize(conditional: &Array2<f64>) -> Array2<f64> {
    let n = conditional.nrows();
    let scale = 1.0 / (2.0 * n as f64);
    Array2::from_shape_fn(
        (n, n),
        |(i, j)| {
            if i == j {
                0.0
            } else {
                (conditional[[i, j]] + conditional[[j, i]]) * scale
            }
        },
    )
}

/// Symmetrised joint affinities with off-diagonal entries floored at
/// [`PROB_FLOOR`].
pub fn joint_probs(conditional: &Array2<f64>) -> Array2<f64> {
    let mut p = symmetrize(conditional);
    for ((i, j), v) in p.indexed_iter_mut() {
        if i != j {
            *v = v.max(PROB_FLOOR);
        }
    }
    p
}

/// Student-t affinities of an embedding.
#[derive(Debug, Clone)]
pub struct LowDimAffinities {
    /// Normalised `q_ij`, zero diagonal, floored at [`PROB_FLOOR`].
    pub q: Array2<f64>,
    /// Unnormalised kernel `(1 + ‖y_i - y_j‖²)⁻¹`, zero diagonal.
    pub kernel: Array2<f64>,
    /// Sum of the kernel over ordered pairs `k ≠ l`.
    pub kernel_sum: f64,
}

pub fn low_dim_affinities(y: &Array2<f64>) -> LowDimAffinities {
    let n = y.nrows();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y.row(i);
            let row: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let d2: f64 = yi.iter().zip(y.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                        1.0 / (1.0 + d2)
                    }
                })
                .collect();
            let s = row.iter().sum();
            (row, s)
        })
        .collect();
    let kernel_sum: f64 = rows.iter().map(|(_, s)| s).sum();
    let mut kernel = Array2::zeros((n, n));
    for (i, (row, _)) in rows.into_iter().enumerate() {
        kernel.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    let q = Array2::from_shape_fn(
        (n, n),
        |(i, j)| {
            if i == j {
                0.0
            } else {
                (kernel[[i, j]] / kernel_sum).max(PROB_FLOOR)
            }
        },
    );
    LowDimAffinities { q, kernel, kernel_sum }
}

/// `Σ_{i≠j} p_ij ln(p_ij / q_ij)`.
pub fn kl_divergence(p: &Array2<f64>, q: &Array2<f64>) -> f64 {
    let n = p.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let pij = p[[i, j]];
                    if pij > 0.0 {
                        pij * (pij / q[[i, j]]).ln()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .sum()
}

/// `grad_i = 4 Σ_j (p_ij - q_ij)(y_i - y_j)(1 + ‖y_i - y_j‖²)⁻¹`.
pub fn tsne_gradient(p: &Array2<f64>, low: &LowDimAffinities, y: &Array2<f64>) -> Array2<f64> {
    let (n, dims) = y.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; dims];
            for j in (0..n).filter(|&j| j != i) {
                let w = (p[[i, j]] - low.q[[i, j]]) * low.kernel[[i, j]];
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc += w * (y[[i, c]] - y[[j, c]]);
                }
            }
            g.iter_mut().for_each(|v| *v *= 4.0);
            g
        })
        .collect();
    let mut grad = Array2::zeros((n, dims));
    for (mut out, row) in grad.axis_iter_mut(Axis(0)).zip(rows) {
        out.assign(&ndarray::Array1::from(row));
    }
    grad
}
