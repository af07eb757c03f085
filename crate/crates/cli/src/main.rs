//! `gapkit` command line: synthesize paired datasets, align them, score
//! them, tune the transport regularizer, and merge per-method reports.
//!
//! Every command is deterministic given its flags plus `--seed`; reruns
//! produce byte-identical files. Failures exit nonzero with a one-line
//! diagnostic on stderr.

mod commands;
mod method;
mod provenance;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "gapkit",
    version,
    about = "Measure and reduce the image-text modality gap in paired embeddings",
    after_help = "GAPKIT_THREADS caps internal parallelism (unset or 0 uses all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paired dataset with a controlled modality gap
    Synth(SynthArgs),
    /// Re-embed a paired dataset with ORIG, SPEC{k}, OT, or PCA{k}
    Align(AlignArgs),
    /// Score a paired dataset and write a metric report
    Eval(EvalArgs),
    /// Grid-search transport hyperparameters on a train/validation split
    TuneOt(TuneArgs),
    /// Merge per-method reports into one comparison table
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RotationFlag {
    Shared,
    Independent,
}

impl RotationFlag {
    fn to_core(self) -> gapkit::synth::RotationMode {
        match self {
            RotationFlag::Shared => gapkit::synth::RotationMode::Shared,
            RotationFlag::Independent => gapkit::synth::RotationMode::Independent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegModeFlag {
    Displacement,
    Position,
}

impl RegModeFlag {
    fn to_core(self) -> gapkit::ot::RegMode {
        match self {
            RegModeFlag::Displacement => gapkit::ot::RegMode::Displacement,
            RegModeFlag::Position => gapkit::ot::RegMode::Position,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Pair count
    #[arg(long)]
    n: usize,
    /// Shared latent dimension
    #[arg(long, default_value_t = 16)]
    d_latent: usize,
    /// Embedding dimension (>= d_latent)
    #[arg(long, default_value_t = 64)]
    d_embed: usize,
    /// Offset magnitude between the modality clusters
    #[arg(long, default_value_t = 1.0)]
    gap: f64,
    /// Isotropic noise scale
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Whether both modalities share one rotation or draw their own
    #[arg(long, value_enum, default_value_t = RotationFlag::Shared)]
    rotation: RotationFlag,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AlignArgs {
    /// Pair manifest (JSON with images/texts paths)
    #[arg(long)]
    manifest: PathBuf,
    /// ORIG, SPEC{k}, OT, or PCA{k}; spec/pca may take k from --k instead
    #[arg(long)]
    method: String,
    /// Dimension for spec/pca when not embedded in --method
    #[arg(long)]
    k: Option<usize>,
    /// Regularization strength for OT
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Source-side graph weight for OT
    #[arg(long, default_value_t = 1.0)]
    lambda_s: f64,
    /// Target-side graph weight for OT
    #[arg(long, default_value_t = 1.0)]
    lambda_t: f64,
    /// Neighbor count for the OT similarity graphs
    #[arg(long, default_value_t = 10)]
    sim_k: usize,
    #[arg(long, value_enum, default_value_t = RegModeFlag::Displacement)]
    reg_mode: RegModeFlag,
    /// Fit OT on this many pairs (seeded shuffle) and map the rest
    #[arg(long)]
    train_pairs: Option<usize>,
    /// Neighbors for out-of-sample mapping
    #[arg(long, default_value_t = 5)]
    nn: usize,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// L2-normalize rows before aligning
    #[arg(long)]
    normalize: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Pair manifest (JSON with images/texts paths)
    #[arg(long)]
    manifest: PathBuf,
    /// Method label recorded in the report
    #[arg(long, default_value = "ORIG")]
    method: String,
    /// Dataset label; defaults to the manifest file stem
    #[arg(long)]
    dataset: Option<String>,
    /// Comma list from heterogeneity,ranks,fid,recall,distances
    #[arg(long)]
    metrics: Option<String>,
    /// Comma list of K values for recall
    #[arg(long, default_value = "1,5,10,20")]
    recall_k: String,
    /// Drop matching pairs from the cross-pair distance mean
    #[arg(long)]
    exclude_matching: bool,
    /// L2-normalize rows before scoring
    #[arg(long)]
    normalize: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    /// Pair manifest (JSON with images/texts paths)
    #[arg(long)]
    manifest: PathBuf,
    /// Pairs fitted per cell; the rest become the validation set
    #[arg(long)]
    train_pairs: usize,
    /// Comma list of regularization strengths
    #[arg(long, default_value = "0.1,1,10")]
    eta: String,
    /// Comma list of source-side weights
    #[arg(long, default_value = "0.5,1,2")]
    lambda_s: String,
    /// Comma list of target-side weights
    #[arg(long, default_value = "0.5,1,2")]
    lambda_t: String,
    #[arg(long, default_value_t = 10)]
    sim_k: usize,
    #[arg(long, value_enum, default_value_t = RegModeFlag::Displacement)]
    reg_mode: RegModeFlag,
    #[arg(long, default_value_t = 5)]
    nn: usize,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// L2-normalize rows before fitting
    #[arg(long)]
    normalize: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// MetricReport JSON files, first one is the significance baseline
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Merge reports even when their dataset labels differ
    #[arg(long)]
    allow_mixed: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Align(args) => commands::align::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::TuneOt(args) => commands::tune::run(args),
        Command::Report(args) => commands::report::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("gapkit: {err:#}");
        std::process::exit(1);
    }
}
