use super::{Patch, PatchError, Result};

pub const DEFAULT_BINS: usize = 256;

fn bin_of(p: f64, bins: usize) -> usize {
    ((p * bins as f64) as usize).min(bins - 1)
}

/// Per-patch histogram equalisation: every pixel is replaced by the
/// empirical CDF of its bin, i.e. the fraction of pixels whose bin is at
/// or below its own. Output lies in (0, 1] and preserves pixel rank order.
pub fn histogram_equalize(patch: &Patch, bins: usize) -> Result<Patch> {
    if bins < 2 {
        return Err(PatchError::Config(format!("histogram needs at least 2 bins, got {bins}")));
    }
    let mut counts = vec![0usize; bins];
    let binned: Vec<usize> = patch.pixels().iter().map(|&p| bin_of(p, bins)).collect();
    for &b in &binned {
        counts[b] += 1;
    }
    let mut cdf = counts;
    let mut running = 0;
    for c in cdf.iter_mut() {
        running += *c;
        *c = running;
    }
    let total = patch.pixels().len() as f64;
    let pixels = binned.iter().map(|&b| cdf[b] as f64 / total).collect();
    Patch::new(patch.width(), patch.height(), pixels, patch.label())
}
