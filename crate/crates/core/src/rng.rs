//! Seeded random sources shared by every stochastic stage.
//!
//! All randomness in the workbench flows from an explicit `u64` seed through
//! ChaCha8, so runs are reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type BenchRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> BenchRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in the half-open interval (0, 1].
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Fills `out` with i.i.d. standard normal values using the Box–Muller
/// transform. Values are produced in pairs; an odd tail discards the spare.
pub fn fill_standard_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_mut(2);
    for chunk in &mut chunks {
        let u1 = open_unit(rng);
        let u2 = rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        chunk[0] = radius * angle.cos();
        if let Some(second) = chunk.get_mut(1) {
            *second = radius * angle.sin();
        }
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let mut v = [0.0];
    fill_standard_normal(rng, &mut v);
    v[0]
}
