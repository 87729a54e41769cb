//! `bench`: the lesion-realism pipeline from fixture generation to the
//! observer-study service.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 I/O or malformed
//! input, 3 numeric failure.

mod commands;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Synthetic lesion realism benchmark")]
struct Cli {
    /// Root for default input and output paths.
    #[arg(long, global = true, env = "BENCH_DATA_DIR", default_value = "bench-data")]
    data_dir: PathBuf,
    /// Worker threads for parallel numerics (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic lesion-like source images and their manifest.
    Fixtures(commands::FixturesArgs),
    /// Crop, equalise and export every manifest entry as a patch.
    Ingest(commands::IngestArgs),
    /// Train the GAN on ingested patches or on the 2-D toy mixture.
    GanTrain(commands::GanTrainArgs),
    /// Draw synthetic patches from a checkpoint.
    GanSample(commands::GanSampleArgs),
    /// Embed a patch matrix in 2-D and plot it.
    Tsne(commands::TsneArgs),
    /// Plot the ROC curve of a completed study session.
    PlotRoc(commands::PlotRocArgs),
    /// Tile PGM patches into one grid image.
    Montage(commands::MontageArgs),
    /// Create an observer-study session in the event log.
    StudyCreate(commands::StudyCreateArgs),
    /// Run the study HTTP service until interrupted.
    Serve(commands::ServeArgs),
    /// Print the report of a completed study session.
    Report(commands::ReportArgs),
}

/// Event log and manifest shared by the study commands.
#[derive(Debug, Args)]
pub struct StudyFiles {
    /// Study event log.
    #[arg(long = "event-log", env = "BENCH_EVENT_LOG")]
    pub event_log: Option<PathBuf>,
    /// Patch manifest the study samples from; images are resolved next to it.
    #[arg(long, env = "BENCH_MANIFEST")]
    pub manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("BENCH_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().expect("thread pool configured once");
    }
    let data = cli.data_dir.as_path();
    let result: Result<(), CliError> = match cli.command {
        Command::Fixtures(a) => commands::fixtures(data, a),
        Command::Ingest(a) => commands::ingest(data, a),
        Command::GanTrain(a) => commands::gan_train(data, a),
        Command::GanSample(a) => commands::gan_sample(data, a),
        Command::Tsne(a) => commands::tsne(data, a),
        Command::PlotRoc(a) => commands::plot_roc(data, a),
        Command::Montage(a) => commands::montage(data, a),
        Command::StudyCreate(a) => commands::study_create(data, a),
        Command::Serve(a) => commands::serve(data, a),
        Command::Report(a) => commands::report(data, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
