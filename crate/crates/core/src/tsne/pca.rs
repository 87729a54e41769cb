use ndarray::{Array1, Array2, Axis};

use crate::rng::{fill_standard_normal, seeded};

const POWER_ITERATIONS: usize = 200;

/// Projects the centred rows of `x` onto their top `k` principal axes,
/// found by power iteration with deflation on `XᵀX`.
pub fn pca_reduce(x: &Array2<f64>, k: usize, seed: u64) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centred = x - &mean;
    let dim = x.ncols();
    let k = k.min(dim);
    let mut rng = seeded(seed);
    let mut axes: Vec<Array1<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut start = vec![0.0; dim];
        fill_standard_normal(&mut rng, &mut start);
        let mut v = Array1::from(start);
        for _ in 0..POWER_ITERATIONS {
            let mut next = centred.t().dot(&centred.dot(&v));
            for a in &axes {
                let overlap = a.dot(&next);
                next.scaled_add(-overlap, a);
            }
            let norm = next.dot(&next).sqrt();
            if norm == 0.0 {
                break;
            }
            v = next / norm;
        }
        axes.push(v);
    }
    let mut out = Array2::zeros((x.nrows(), k));
    for (c, a) in axes.iter().enumerate() {
        out.column_mut(c).assign(&centred.dot(a));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn recovers_dominant_axis() {
        // Points spread along (1, 1, 0) with small noise in z.
        let x = array![[-2.0, -2.0, 0.01], [-1.0, -1.0, -0.02], [0.0, 0.0, 0.0], [1.0, 1.0, 0.02], [2.0, 2.0, -0.01]];
        let y = pca_reduce(&x, 1, 3);
        let expected = [-2.0, -1.0, 0.0, 1.0, 2.0].map(|t: f64| t * 2f64.sqrt());
        let sign = y[[4, 0]].signum();
        for (got, want) in y.column(0).iter().zip(expected) {
            assert!((sign * got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }
}
