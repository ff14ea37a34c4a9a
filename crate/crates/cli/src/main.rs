//! `lidarcull` — curate LiDAR detection training data and evaluate
//! detection output.
//!
//! Set `RUST_LOG=info` (or `debug`) for progress logging.

mod commands;
mod error;
mod manifest;

use clap::{Parser, Subcommand, ValueEnum};
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lidarcull", version, about = "LiDAR dataset curation and detection evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: available cores). Output is identical at
    /// any parallelism level.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter dataset annotations through the validity constraints
    Filter(FilterArgs),
    /// Print one CSV row of measurements per annotated object
    Stats(StatsArgs),
    /// Match detections against ground truth and report PR curve + AP
    Eval(EvalArgs),
}

#[derive(clap::Args)]
pub struct FilterArgs {
    /// Manifest file (cloud<TAB>label lines) or dataset directory to scan
    pub manifest: PathBuf,

    /// Directory for filtered label files and report.json
    #[arg(long)]
    pub output: PathBuf,

    /// key=value config file; flags below override its values
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Distance threshold in meters
    #[arg(long)]
    pub eta: Option<f64>,

    /// Minimum in-box point count
    #[arg(long)]
    pub delta: Option<usize>,

    /// Comma-separated occlusion levels to discard
    #[arg(long)]
    pub discard_occlusions: Option<String>,

    #[arg(long)]
    pub disable_distance: bool,

    #[arg(long)]
    pub disable_point_count: bool,

    #[arg(long)]
    pub disable_occlusion: bool,

    /// Disable every constraint (the filter copies its input)
    #[arg(long)]
    pub disable_all: bool,

    /// Also write verdicts.csv with one audit row per input object
    #[arg(long)]
    pub verdicts: bool,
}

#[derive(clap::Args)]
pub struct StatsArgs {
    /// Manifest file or dataset directory to scan
    pub manifest: PathBuf,
}

#[derive(clap::Args)]
pub struct EvalArgs {
    /// Ground-truth labels: directory of .txt files or a manifest
    pub gt: PathBuf,

    /// Detection labels (scored): directory of .txt files or a manifest
    pub det: PathBuf,

    /// Directory for summary.txt and pr_curve.csv
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Minimum IoU for a detection to match a ground-truth box
    #[arg(long, default_value_t = 0.3)]
    pub iou_threshold: f64,

    #[arg(long, value_enum, default_value_t = IouKindArg::Full3d)]
    pub iou_kind: IouKindArg,

    #[arg(long, value_enum, default_value_t = ApModeArg::Interp41)]
    pub ap_mode: ApModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum IouKindArg {
    /// Bird's-eye-view rectangle overlap
    Bev,
    /// Full volumetric overlap
    Full3d,
}

impl From<IouKindArg> for lidarcull::IouKind {
    fn from(value: IouKindArg) -> Self {
        match value {
            IouKindArg::Bev => lidarcull::IouKind::Bev,
            IouKindArg::Full3d => lidarcull::IouKind::Full3D,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ApModeArg {
    /// Exact area under the interpolated PR envelope
    AllPoint,
    /// 41-point interpolated mean
    Interp41,
}

impl From<ApModeArg> for lidarcull::ApMode {
    fn from(value: ApModeArg) -> Self {
        match value {
            ApModeArg::AllPoint => lidarcull::ApMode::AllPoint,
            ApModeArg::Interp41 => lidarcull::ApMode::Interpolated41,
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Filter(args) => commands::cmd_filter(args),
        Command::Stats(args) => commands::cmd_stats(args),
        Command::Eval(args) => commands::cmd_eval(args),
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
