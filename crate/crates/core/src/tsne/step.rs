//! Allocation-free inner loop of the optimiser. Arithmetic matches
//! [`low_dim_affinities`](super::low_dim_affinities),
//! [`kl_divergence`](super::kl_divergence) and
//! [`tsne_gradient`](super::tsne_gradient) operation for operation, so
//! results are bitwise identical to the reference functions.

use rayon::prelude::*;

use super::PROB_FLOOR;

pub(super) struct Workspace {
    n: usize,
    dims: usize,
    /// Row-major Student-t kernel, zero diagonal.
    kernel: Vec<f64>,
    kernel_sum: f64,
}

impl Workspace {
    pub(super) fn new(n: usize, dims: usize) -> Self {
        Workspace { n, dims, kernel: vec![0.0; n * n], kernel_sum: 0.0 }
    }

    /// Recomputes the kernel for row-major coordinates `y`.
    pub(super) fn refresh(&mut self, y: &[f64]) {
        let (n, dims) = (self.n, self.dims);
        let row_sums: Vec<f64> = self
            .kernel
            .par_chunks_mut(n)
            .enumerate()
            .map(|(i, row)| {
                let yi = &y[i * dims..(i + 1) * dims];
                if dims == 2 {
                    // Branch-free so the loop vectorises.
                    let (a0, a1) = (yi[0], yi[1]);
                    for (k, yj) in row.iter_mut().zip(y.chunks_exact(2)) {
                        let (d0, d1) = (a0 - yj[0], a1 - yj[1]);
                        *k = 1.0 / (1.0 + (d0 * d0 + d1 * d1));
                    }
                } else {
                    for (k, yj) in row.iter_mut().zip(y.chunks_exact(dims)) {
                        let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                        *k = 1.0 / (1.0 + d2);
                    }
                }
                row[i] = 0.0;
                row.iter().sum()
            })
            .collect();
        self.kernel_sum = row_sums.iter().sum();
    }

    fn q(&self, k: f64) -> f64 {
        (k / self.kernel_sum).max(PROB_FLOOR)
    }

    pub(super) fn kl(&self, p: &[f64]) -> f64 {
        let n = self.n;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let (prow, krow) = (&p[i * n..(i + 1) * n], &self.kernel[i * n..(i + 1) * n]);
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| {
                        let pij = prow[j];
                        if pij > 0.0 {
                            pij * (pij / self.q(krow[j])).ln()
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum()
    }

    pub(super) fn gradient(&self, p: &[f64], y: &[f64], out: &mut [f64]) {
        let (n, dims) = (self.n, self.dims);
        out.par_chunks_mut(dims).enumerate().for_each(|(i, g)| {
            let (prow, krow) = (&p[i * n..(i + 1) * n], &self.kernel[i * n..(i + 1) * n]);
            let yi = &y[i * dims..(i + 1) * dims];
            g.fill(0.0);
            for j in (0..n).filter(|&j| j != i) {
                let w = (prow[j] - self.q(krow[j])) * krow[j];
                let yj = &y[j * dims..(j + 1) * dims];
                for c in 0..dims {
                    g[c] += w * (yi[c] - yj[c]);
                }
            }
            g.iter_mut().for_each(|v| *v *= 4.0);
        });
    }
}
