use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use lesionbench::fixtures::{fixture_manifest, lesion_images, FixtureSpec};
use lesionbench::gan::{
    generator_forward, load_checkpoint, sample_latent, save_checkpoint, train, DatasetSource, GanCheckpoint, GanConfig,
    GaussianMixture2d, RealSource,
};
use lesionbench::patchio::{
    extract_patch, histogram_equalize, write_f32raw, write_pgm, F32Raw, Label, Manifest, ManifestEntry, Patch,
    DEFAULT_BINS, DEFAULT_PATCH_SIZE,
};
use lesionbench::rng::seeded;
use lesionbench::tsne::{read_labels, run_tsne, TsneConfig};
use lesionbench::viz::{montage as tile_montage, roc_svg, scatter_svg, PlotStyle};
use lesionbench_study::{replay_log, session_report, DirImages, StudyService};

use crate::error::{patch_err, CliError, CliResult};
use crate::files::{self, manifest_root, read_manifest, read_matrix, read_pgm_file};
use crate::StudyFiles;

fn or_default(path: Option<PathBuf>, data: &Path, rel: &str) -> PathBuf {
    path.unwrap_or_else(|| data.join(rel))
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory [default: <data-dir>/sources].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    n_per_class: usize,
    /// Side of each square source image.
    #[arg(long, default_value_t = 192)]
    image_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn fixtures(data: &Path, a: FixturesArgs) -> CliResult {
    let out = or_default(a.out, data, "sources");
    if a.image_size < 8 {
        return Err(CliError::Usage("--image-size must be at least 8".into()));
    }
    let images = lesion_images(&FixtureSpec { n_per_class: a.n_per_class, image_size: a.image_size, seed: a.seed });
    files::create_dir(&out)?;
    for f in &images {
        files::write(&out.join(&f.name), write_pgm(&f.image))?;
    }
    files::write(&out.join("manifest.csv"), fixture_manifest(&images).to_csv())?;
    println!("{} images in {}", images.len(), out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Source manifest [default: <data-dir>/sources/manifest.csv].
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory [default: <data-dir>/patches].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PATCH_SIZE)]
    patch_size: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
}

/// Output file name for a manifest path: directories flattened, `.pgm`.
fn patch_file_name(source: &str) -> String {
    let stem = Path::new(source).with_extension("");
    let flat: String = stem.to_string_lossy().chars().map(|c| if c == '/' || c == '\\' { '_' } else { c }).collect();
    format!("{flat}.pgm")
}

pub fn ingest(data: &Path, a: IngestArgs) -> CliResult {
    let manifest_path = or_default(a.manifest, data, "sources/manifest.csv");
    let out = or_default(a.out, data, "patches");
    let manifest = read_manifest(&manifest_path)?;
    let root = manifest_root(&manifest_path);
    let size = a.patch_size;
    files::create_dir(&out)?;

    let mut entries = Vec::with_capacity(manifest.len());
    let mut matrix = F32Raw { width: size * size, height: 0, data: Vec::new() };
    let mut labels = String::new();
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for entry in manifest.entries() {
        let src = root.join(&entry.path);
        let image = read_pgm_file(&src)?;
        let center = match entry.center {
            Some((x, y)) => (x as i64, y as i64),
            None => ((image.width() / 2) as i64, (image.height() / 2) as i64),
        };
        let patch = extract_patch(&image, center, size, entry.label).map_err(patch_err(&src))?;
        let patch = histogram_equalize(&patch, a.bins).map_err(patch_err(&src))?;
        let name = patch_file_name(&entry.path);
        files::write(&out.join(&name), write_pgm(&patch))?;
        matrix.data.extend(F32Raw::from_patch(&patch).data);
        matrix.height += 1;
        writeln!(labels, "{}", entry.label).expect("string");
        *counts.entry(entry.label).or_default() += 1;
        entries.push(ManifestEntry { path: name, label: entry.label, center: None });
    }
    let out_manifest = Manifest::from_entries(entries).map_err(|e| CliError::Usage(e.to_string()))?;
    files::write(&out.join("manifest.csv"), out_manifest.to_csv())?;
    files::write(&out.join("patches.f32raw"), write_f32raw(&matrix))?;
    files::write(&out.join("labels.txt"), labels)?;
    let summary: Vec<String> = counts.iter().map(|(l, n)| format!("{l}:{n}")).collect();
    println!("{}", summary.join(" "));
    Ok(())
}

#[derive(Debug, Args)]
pub struct GanTrainArgs {
    /// Patch matrix (f32raw, one sample per row); the 2-D toy mixture when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory [default: <data-dir>/gan].
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Comma-separated hidden widths.
    #[arg(long, value_delimiter = ',')]
    generator_hidden: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    discriminator_hidden: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
}

impl GanTrainArgs {
    fn config(&self) -> CliResult<GanConfig> {
        let mut cfg = GanConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_kv(&files::read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.latent_dim {
            cfg.latent_dim = v;
        }
        if let Some(v) = &self.generator_hidden {
            cfg.generator_hidden = v.clone();
        }
        if let Some(v) = &self.discriminator_hidden {
            cfg.discriminator_hidden = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Square patches come back as images; anything else as one row.
fn sample_shape(dim: usize) -> (usize, usize) {
    let side = (dim as f64).sqrt().round() as usize;
    if side * side == dim {
        (side, side)
    } else {
        (dim, 1)
    }
}

pub fn gan_train(data: &Path, a: GanTrainArgs) -> CliResult {
    let cfg = a.config()?;
    let out = or_default(a.out.clone(), data, "gan");
    let toy = GaussianMixture2d::default();
    let (mut source, shape): (Box<dyn RealSource>, _) = match &a.data {
        Some(path) => {
            let m = read_matrix(path)?;
            if m.nrows() == 0 {
                return Err(CliError::Usage(format!("{}: no samples", path.display())));
            }
            let shape = sample_shape(m.ncols());
            (Box::new(DatasetSource::new(m)), shape)
        }
        None => (Box::new(toy.clone()), (2, 1)),
    };
    let (model, trace) = train(&cfg, source.as_mut())?;
    let ckpt =
        GanCheckpoint { sample_shape: shape, generator: model.generator.clone(), discriminator: model.discriminator };
    files::write(&out.join("gan.ckpt"), save_checkpoint(&ckpt))?;
    files::write(&out.join("trace.csv"), trace.to_csv())?;
    let last = trace.entries.last().expect("validated steps >= 1");
    println!("steps {} d_loss {:.6} g_loss {:.6}", trace.entries.len(), last.d_loss, last.g_loss);
    if a.data.is_none() {
        let samples =
            generator_forward(&model.generator, &sample_latent(&mut seeded(cfg.rng_seed + 1), 1000, cfg.latent_dim))?;
        let near = samples.rows().into_iter().filter(|r| toy.nearest_mean_distance([r[0], r[1]]) <= 0.2).count();
        println!("toy samples within 0.2 of a mean: {near}/1000");
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct GanSampleArgs {
    /// Checkpoint [default: <data-dir>/gan/gan.ckpt].
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory [default: <data-dir>/samples].
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn gan_sample(data: &Path, a: GanSampleArgs) -> CliResult {
    let path = or_default(a.checkpoint, data, "gan/gan.ckpt");
    let out = or_default(a.out, data, "samples");
    let ckpt = load_checkpoint(&files::read(&path)?).map_err(|e| CliError::io(&path, e))?;
    let z = sample_latent(&mut seeded(a.seed), a.n, ckpt.generator.input_dim());
    let x = generator_forward(&ckpt.generator, &z)?;
    let (w, h) = ckpt.sample_shape;
    files::create_dir(&out)?;
    let mut entries = Vec::with_capacity(a.n);
    for (i, row) in x.rows().into_iter().enumerate() {
        let patch = Patch::new(w, h, row.to_vec(), Label::SyntheticLesion)
            .map_err(|e| CliError::Numeric(format!("sample {i}: {e}")))?;
        let name = format!("sample_{i:04}.pgm");
        files::write(&out.join(&name), write_pgm(&patch))?;
        entries.push(ManifestEntry { path: name, label: Label::SyntheticLesion, center: None });
    }
    let manifest = Manifest::from_entries(entries).expect("unique names");
    files::write(&out.join("manifest.csv"), manifest.to_csv())?;
    println!("{} samples in {}", a.n, out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    /// Data matrix (f32raw, one sample per row) [default: <data-dir>/patches/patches.f32raw].
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// One label token per line [default: <data-dir>/patches/labels.txt].
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory [default: <data-dir>/tsne].
    #[arg(long)]
    out: Option<PathBuf>,
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    exaggeration: Option<f64>,
    #[arg(long)]
    exaggeration_iters: Option<usize>,
    /// Reduce inputs to this many principal components first.
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl TsneArgs {
    fn config(&self) -> CliResult<TsneConfig> {
        let mut cfg = TsneConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_kv(&files::read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(v) = self.perplexity {
            cfg.perplexity = v;
        }
        if let Some(v) = self.iterations {
            cfg.iterations = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.exaggeration {
            cfg.early_exaggeration_factor = v;
        }
        if let Some(v) = self.exaggeration_iters {
            cfg.exaggeration_iters = v;
        }
        if let Some(v) = self.pca {
            cfg.pca_components = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        Ok(cfg)
    }
}

pub fn tsne(data: &Path, a: TsneArgs) -> CliResult {
    let cfg = a.config()?;
    let matrix_path = or_default(a.matrix.clone(), data, "patches/patches.f32raw");
    let labels_path = or_default(a.labels.clone(), data, "patches/labels.txt");
    let out = or_default(a.out.clone(), data, "tsne");
    let x = read_matrix(&matrix_path)?;
    let labels = read_labels(&files::read_text(&labels_path)?).map_err(|e| CliError::io(&labels_path, e))?;
    if labels.len() != x.nrows() {
        return Err(CliError::Usage(format!(
            "{} has {} rows but {} has {} labels",
            matrix_path.display(),
            x.nrows(),
            labels_path.display(),
            labels.len()
        )));
    }
    cfg.validate(x.nrows())?;
    let embedding = run_tsne(&x, &cfg)?.with_labels(labels)?;
    let svg = scatter_svg(&embedding, &PlotStyle::default())?;
    files::write(&out.join("embedding.csv"), embedding.to_csv())?;
    files::write(&out.join("scatter.svg"), svg)?;
    files::write(&out.join("kl_trace.csv"), embedding.kl_trace_csv())?;
    println!("final kl {:.6}", embedding.kl_trace.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

#[derive(Debug, Args)]
pub struct MontageArgs {
    /// PGM patches in grid order.
    #[arg(required = true)]
    patches: Vec<PathBuf>,
    #[arg(long, default_value_t = 4)]
    columns: usize,
    /// Output PGM [default: <data-dir>/montage.pgm].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn montage(data: &Path, a: MontageArgs) -> CliResult {
    let out = or_default(a.out, data, "montage.pgm");
    let patches = a.patches.iter().map(|p| read_pgm_file(p)).collect::<CliResult<Vec<_>>>()?;
    let grid = tile_montage(&patches, a.columns)?;
    files::write(&out, write_pgm(&grid))?;
    println!("{}x{} montage in {}", grid.width(), grid.height(), out.display());
    Ok(())
}

fn event_log(files: &StudyFiles, data: &Path) -> PathBuf {
    files.event_log.clone().unwrap_or_else(|| data.join("study/events.log"))
}

fn open_service(files: &StudyFiles, data: &Path) -> CliResult<StudyService> {
    let manifest_path = files.manifest.clone().unwrap_or_else(|| data.join("patches/manifest.csv"));
    let manifest = read_manifest(&manifest_path)?;
    let log = event_log(files, data);
    if let Some(dir) = log.parent().filter(|d| !d.as_os_str().is_empty()) {
        files::create_dir(dir)?;
    }
    Ok(StudyService::open(&log, manifest, Box::new(DirImages::new(manifest_root(&manifest_path))))?)
}

#[derive(Debug, Args)]
pub struct StudyCreateArgs {
    #[command(flatten)]
    files: StudyFiles,
    #[arg(long)]
    observer: String,
    #[arg(long, default_value_t = 75)]
    n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn study_create(data: &Path, a: StudyCreateArgs) -> CliResult {
    let service = open_service(&a.files, data)?;
    let view = service.create_study(&lesionbench_study::CreateRequest {
        observer_id: a.observer,
        n_per_class: a.n_per_class,
        seed: a.seed,
    })?;
    println!("{}", view.session_id);
    Ok(())
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    files: StudyFiles,
    #[arg(long, env = "BENCH_LISTEN", default_value = "127.0.0.1:8080")]
    listen: String,
}

pub fn serve(data: &Path, a: ServeArgs) -> CliResult {
    let service = Arc::new(open_service(&a.files, data)?);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&a.listen)
            .await
            .map_err(|e| CliError::Io(format!("cannot bind {}: {e}", a.listen)))?;
        let addr = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
        println!("listening on {addr}");
        tracing::info!(%addr, "study service started");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        lesionbench_study::http::serve(listener, service, shutdown).await.map_err(|e| CliError::Io(e.to_string()))
    })
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Study event log [default: <data-dir>/study/events.log].
    #[arg(long = "event-log", env = "BENCH_EVENT_LOG")]
    event_log: Option<PathBuf>,
    /// Session id, e.g. s000001.
    #[arg(long)]
    session: String,
}

fn load_report(data: &Path, a: &SessionArgs) -> CliResult<lesionbench::scoring::RocReport> {
    let path = a.event_log.clone().unwrap_or_else(|| data.join("study/events.log"));
    let replay = replay_log(&files::read(&path)?).map_err(|e| CliError::io(&path, e))?;
    for w in &replay.warnings {
        tracing::warn!(log = %path.display(), "{w}");
    }
    Ok(session_report(&replay.state, &a.session)?)
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    session: SessionArgs,
}

pub fn report(data: &Path, a: ReportArgs) -> CliResult {
    print!("{}", load_report(data, &a.session)?.to_text());
    Ok(())
}

#[derive(Debug, Args)]
pub struct PlotRocArgs {
    #[command(flatten)]
    session: SessionArgs,
    /// Output SVG [default: <data-dir>/roc.svg].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn plot_roc(data: &Path, a: PlotRocArgs) -> CliResult {
    let report = load_report(data, &a.session)?;
    let out = or_default(a.out, data, "roc.svg");
    files::write(&out, roc_svg(&report))?;
    println!("auc {:.4} in {}", report.auc, out.display());
    Ok(())
}
