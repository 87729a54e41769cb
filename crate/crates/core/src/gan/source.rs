use ndarray::Array2;
use rand::Rng;

use crate::rng::standard_normal;

/// Supplier of real training batches.
pub trait RealSource {
    fn dim(&self) -> usize;
    fn sample_batch(&mut self, n: usize, rng: &mut dyn rand::RngCore) -> Array2<f64>;
}

/// Rows of a fixed data matrix (e.g. vectorised patches), drawn uniformly
/// with replacement.
#[derive(Debug, Clone)]
pub struct DatasetSource {
    data: Array2<f64>,
}

impl DatasetSource {
    /// Panics if `data` has no rows.
    pub fn new(data: Array2<f64>) -> Self {
        assert!(data.nrows() > 0, "dataset needs at least one row");
        DatasetSource { data }
    }
}

impl RealSource for DatasetSource {
    fn dim(&self) -> usize {
        self.data.ncols()
    }

    fn sample_batch(&mut self, n: usize, rng: &mut dyn rand::RngCore) -> Array2<f64> {
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.data.nrows())).collect();
        self.data.select(ndarray::Axis(0), &rows)
    }
}

/// Equal-weight mixture of isotropic 2-D Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture2d {
    pub means: Vec<[f64; 2]>,
    pub std: f64,
}

impl Default for GaussianMixture2d {
    /// Two components inside the unit square, where the generator's
    /// output range lives.
    fn default() -> Self {
        GaussianMixture2d { means: vec![[0.25, 0.25], [0.75, 0.75]], std: 0.05 }
    }
}

impl GaussianMixture2d {
    /// Distance from `point` to the closest component mean.
    pub fn nearest_mean_distance(&self, point: [f64; 2]) -> f64 {
        self.means
            .iter()
            .map(|m| ((point[0] - m[0]).powi(2) + (point[1] - m[1]).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

impl RealSource for GaussianMixture2d {
    fn dim(&self) -> usize {
        2
    }

    fn sample_batch(&mut self, n: usize, rng: &mut dyn rand::RngCore) -> Array2<f64> {
        let mut out = Array2::zeros((n, 2));
        for mut row in out.rows_mut() {
            let m = self.means[rng.random_range(0..self.means.len())];
            row[0] = m[0] + self.std * standard_normal(rng);
            row[1] = m[1] + self.std * standard_normal(rng);
        }
        out
    }
}
