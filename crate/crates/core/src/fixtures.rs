//! Seeded synthetic data so the pipeline runs without external images.
//!
//! Source images are noisy backgrounds. Real lesions add a round Gaussian
//! blob at the manifest centre, synthetic lesions an elongated rotated one,
//! and normal tissue adds nothing.

use ndarray::Array2;
use rand::Rng;

use crate::patchio::{Label, Manifest, ManifestEntry, Patch};
use crate::rng::{fill_standard_normal, seeded, standard_normal};

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub n_per_class: usize,
    /// Side of each square source image.
    pub image_size: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec { n_per_class: 10, image_size: 192, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureImage {
    /// File name relative to the manifest directory.
    pub name: String,
    pub image: Patch,
    pub center: (u32, u32),
}

const BACKGROUND: f64 = 0.3;
const NOISE_STD: f64 = 0.05;
const BLOB_PEAK: f64 = 0.55;

/// One image per class in turn: real, synthetic, normal, real, ...
pub fn lesion_images(spec: &FixtureSpec) -> Vec<FixtureImage> {
    let classes = [Label::RealLesion, Label::SyntheticLesion, Label::Normal];
    let mut rng = seeded(spec.seed);
    let size = spec.image_size.max(1);
    let mut out = Vec::with_capacity(3 * spec.n_per_class);
    for i in 0..spec.n_per_class {
        for label in classes {
            let image = blob_image(size, label, &mut rng);
            out.push(FixtureImage { name: format!("{}_{i:04}.pgm", label.token()), image: image.0, center: image.1 });
        }
    }
    out
}

fn blob_image(size: usize, label: Label, rng: &mut impl Rng) -> (Patch, (u32, u32)) {
    let quarter = size / 4;
    let cx = rng.random_range(quarter..=size - 1 - quarter) as f64;
    let cy = rng.random_range(quarter..=size - 1 - quarter) as f64;
    let sigma = (size as f64 / 16.0) * rng.random_range(0.8..1.25);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (sin, cos) = angle.sin_cos();
    let mut noise = vec![0.0; size * size];
    fill_standard_normal(rng, &mut noise);
    let mut pixels = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let blob = match label {
                Label::RealLesion => (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp(),
                Label::SyntheticLesion => {
                    let u = dx * cos + dy * sin;
                    let v = -dx * sin + dy * cos;
                    let (su, sv) = (1.6 * sigma, 0.5 * sigma);
                    (-(u * u / (2.0 * su * su) + v * v / (2.0 * sv * sv))).exp()
                }
                Label::Normal | Label::Unlabeled => 0.0,
            };
            let v = BACKGROUND + BLOB_PEAK * blob + NOISE_STD * noise[y * size + x];
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    let patch = Patch::new(size, size, pixels, label).expect("pixels clamped to the unit range");
    (patch, (cx as u32, cy as u32))
}

/// Manifest listing the images with their lesion centres.
pub fn fixture_manifest(images: &[FixtureImage]) -> Manifest {
    let entries = images
        .iter()
        .map(|f| ManifestEntry { path: f.name.clone(), label: f.image.label(), center: Some(f.center) })
        .collect();
    Manifest::from_entries(entries).expect("fixture names are unique")
}

/// `n_per_cluster` points around each of three centres in `dim`
/// dimensions. Centres are pairwise `separation` apart and points have unit
/// variance per coordinate. Rows are grouped by cluster, labelled real,
/// synthetic, normal.
pub fn gaussian_clusters(n_per_cluster: usize, dim: usize, separation: f64, seed: u64) -> (Array2<f64>, Vec<Label>) {
    assert!(dim >= 3, "three equidistant centres need at least three dimensions");
    let classes = [Label::RealLesion, Label::SyntheticLesion, Label::Normal];
    let offset = separation / std::f64::consts::SQRT_2;
    let mut rng = seeded(seed);
    let mut x = Array2::zeros((3 * n_per_cluster, dim));
    let mut labels = Vec::with_capacity(3 * n_per_cluster);
    for (k, label) in classes.into_iter().enumerate() {
        for i in 0..n_per_cluster {
            let row = k * n_per_cluster + i;
            for j in 0..dim {
                x[[row, j]] = standard_normal(&mut rng);
            }
            x[[row, k]] += offset;
            labels.push(label);
        }
    }
    (x, labels)
}

/// Fraction of points whose nearest class centroid is their own class.
pub fn nearest_centroid_purity(points: &Array2<f64>, labels: &[Label]) -> f64 {
    assert_eq!(points.nrows(), labels.len());
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let centroids: Vec<Vec<f64>> = classes
        .iter()
        .map(|c| {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == *c).collect();
            (0..points.ncols()).map(|j| rows.iter().map(|&i| points[[i, j]]).sum::<f64>() / rows.len() as f64).collect()
        })
        .collect();
    let hits = (0..labels.len())
        .filter(|&i| {
            let dist = |c: &Vec<f64>| c.iter().enumerate().map(|(j, v)| (points[[i, j]] - v).powi(2)).sum::<f64>();
            let best = (0..classes.len())
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .expect("at least one class");
            classes[best] == labels[i]
        })
        .count();
    hits as f64 / labels.len() as f64
}
