//! End-to-end use of the public API: fixtures through patches, a GAN
//! trained on them, and a t-SNE embedding of the result.

use lesionbench::fixtures::{lesion_images, FixtureSpec};
use lesionbench::gan::{load_checkpoint, save_checkpoint, train, DatasetSource, GanCheckpoint, GanConfig};
use lesionbench::patchio::{
    extract_patch, histogram_equalize, read_f32raw, read_pgm, write_f32raw, write_pgm, F32Raw, Label, Patch,
};
use lesionbench::rng::seeded;
use lesionbench::tsne::{run_tsne, TsneConfig};
use lesionbench::viz::{scatter_svg, PlotStyle};
use ndarray::Array2;

const SIZE: usize = 16;

fn patches() -> Vec<Patch> {
    lesion_images(&FixtureSpec { n_per_class: 8, image_size: 64, seed: 3 })
        .iter()
        .map(|f| {
            let p = extract_patch(&f.image, (f.center.0 as i64, f.center.1 as i64), SIZE, f.image.label()).unwrap();
            histogram_equalize(&p, 256).unwrap()
        })
        .collect()
}

fn matrix(patches: &[Patch]) -> F32Raw {
    F32Raw {
        width: SIZE * SIZE,
        height: patches.len(),
        data: patches.iter().flat_map(|p| p.pixels().iter().map(|&v| v as f32)).collect(),
    }
}

#[test]
fn patches_survive_both_file_formats() {
    let ps = patches();
    assert_eq!(ps.len(), 24);
    for p in &ps {
        assert!(p.pixels().iter().all(|&v| v > 0.0 && v <= 1.0));
        let back = read_pgm(&write_pgm(p)).unwrap();
        assert_eq!((back.width(), back.height()), (SIZE, SIZE));
        for (a, b) in back.pixels().iter().zip(p.pixels()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
    let m = matrix(&ps);
    assert_eq!(read_f32raw(&write_f32raw(&m)).unwrap(), m);
}

#[test]
fn gan_trains_on_patches_and_checkpoints() {
    let m = matrix(&patches());
    let data = Array2::from_shape_vec((m.height, m.width), m.data.iter().map(|&v| v as f64).collect()).unwrap();
    let cfg = GanConfig {
        latent_dim: 8,
        generator_hidden: vec![16],
        discriminator_hidden: vec![16],
        steps: 50,
        batch_size: 8,
        ..GanConfig::default()
    };
    let (model, trace) = train(&cfg, &mut DatasetSource::new(data)).unwrap();
    assert_eq!(trace.entries.len(), 50);
    let samples = model.sample(4, &mut seeded(1)).unwrap();
    assert_eq!(samples.dim(), (4, SIZE * SIZE));
    assert!(samples.iter().all(|&v| (0.0..=1.0).contains(&v)));

    let ckpt =
        GanCheckpoint { sample_shape: (SIZE, SIZE), generator: model.generator, discriminator: model.discriminator };
    let bytes = save_checkpoint(&ckpt);
    assert_eq!(save_checkpoint(&load_checkpoint(&bytes).unwrap()), bytes);
}

#[test]
fn embedding_of_patches_plots_every_point() {
    let ps = patches();
    let labels: Vec<Label> = ps.iter().map(|p| p.label()).collect();
    let x =
        Array2::from_shape_vec((ps.len(), SIZE * SIZE), ps.iter().flat_map(|p| p.pixels().to_vec()).collect()).unwrap();
    let cfg = TsneConfig { perplexity: 5.0, iterations: 200, rng_seed: 4, ..TsneConfig::default() };
    let a = run_tsne(&x, &cfg).unwrap().with_labels(labels.clone()).unwrap();
    let b = run_tsne(&x, &cfg).unwrap().with_labels(labels).unwrap();
    assert_eq!(a, b);
    assert!(a.kl_trace.last().unwrap() < &a.kl_trace[cfg.exaggeration_iters]);
    let svg = scatter_svg(&a, &PlotStyle::default()).unwrap();
    assert_eq!(svg.matches("class=\"point ").count(), ps.len());
}
