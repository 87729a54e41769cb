//! Central-difference verification of analytic gradients.

use rand::Rng;

use super::{MlpGrads, MlpParams};

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn check_coords(
    params: &MlpParams,
    loss: &dyn Fn(&MlpParams) -> (f64, MlpGrads),
    epsilon: f64,
    coords: impl Iterator<Item = usize>,
) -> f64 {
    let (_, analytic) = loss(params);
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in coords {
        let original = probe.param(i);
        probe.set_param(i, original + epsilon);
        let up = loss(&probe).0;
        probe.set_param(i, original - epsilon);
        let down = loss(&probe).0;
        probe.set_param(i, original);
        let numeric = (up - down) / (2.0 * epsilon);
        worst = worst.max(relative_error(analytic.get(i), numeric));
    }
    worst
}

/// Largest relative error between the analytic gradient returned by `loss`
/// and central differences, over every parameter coordinate.
pub fn gradient_check(params: &MlpParams, loss: impl Fn(&MlpParams) -> (f64, MlpGrads), epsilon: f64) -> f64 {
    check_coords(params, &loss, epsilon, 0..params.num_params())
}

/// As [`gradient_check`] but over `max_coords` coordinates drawn without
/// replacement.
pub fn gradient_check_sampled(
    params: &MlpParams,
    loss: impl Fn(&MlpParams) -> (f64, MlpGrads),
    epsilon: f64,
    max_coords: usize,
    rng: &mut impl Rng,
) -> f64 {
    let n = params.num_params();
    let picked = rand::seq::index::sample(rng, n, max_coords.min(n));
    check_coords(params, &loss, epsilon, picked.into_iter())
}
