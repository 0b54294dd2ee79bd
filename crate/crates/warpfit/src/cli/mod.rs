//! Command-line front end.

mod commands;
mod config;
mod simulate;

pub use config::{CvConfig, DataConfig, RunConfig};
pub use simulate::{SimulationSpec, TemplateKind, TemplateSpec, TruthFile, TRUTH_FORMAT};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use warpfit_core::EStepMode;

use crate::error::Result;
use crate::plot::PlotKind;

#[derive(Debug, Parser)]
#[command(name = "warpfit", version, about = "Likelihood-based registration and discrimination of sparse curves")]
pub struct Cli {
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "warpfit-out")]
    pub out: PathBuf,
    /// TOML (or JSON) config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset from a JSON simulation spec.
    Simulate(SimulateArgs),
    /// Fit the registration model for one or more component counts.
    Fit(FitArgs),
    /// Align curves with the warps of a fitted model.
    Register(RegisterArgs),
    /// Cross-validated misclassification rates of logistic discrimination.
    Cv(CvArgs),
    /// Write a figure as SVG plus the CSV of its data.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    LaplaceGhq,
    MapHard,
}

impl From<ModeArg> for EStepMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::LaplaceGhq => EStepMode::LaplaceGhq,
            ModeArg::MapHard => EStepMode::MapHard,
        }
    }
}

/// Model and preprocessing flags shared by the fitting commands.
#[derive(Debug, Clone, Default, Args)]
pub struct FitFlags {
    /// Reference warp knots, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tau0: Option<Vec<f64>>,
    /// Interior knots of the cubic B-spline basis.
    #[arg(long)]
    pub knots: Option<usize>,
    /// Upper bound on EM iterations.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// EM iterations run before the stopping rule applies.
    #[arg(long)]
    pub min_iters: Option<usize>,
    /// Relative log-likelihood change that stops EM.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Quadrature nodes per warp dimension.
    #[arg(long)]
    pub quad: Option<usize>,
    /// Integration over warps: adaptive Gauss-Hermite or the posterior mode only.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Initial warp variance; 0 fits without warping.
    #[arg(long)]
    pub warp_var: Option<f64>,
    /// Drop observations below this abscissa.
    #[arg(long, allow_hyphen_values = true)]
    pub truncate: Option<f64>,
    /// Thin curves to this many observations; 0 keeps all.
    #[arg(long)]
    pub downsample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Long CSV, curve directory or dataset JSON.
    #[arg(long)]
    pub data: PathBuf,
    /// Component counts, comma separated; several write one subdirectory each.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    #[command(flatten)]
    pub flags: FitFlags,
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    /// Long CSV, curve directory or dataset JSON.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Long CSV, curve directory or dataset JSON.
    #[arg(long)]
    pub data: PathBuf,
    /// Labels CSV (`id,group`); optional when the dataset JSON carries labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory written by `fit`, holding `p<k>/` subdirectories.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Component counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
    pub p: Vec<usize>,
    /// Ridge penalty of the logistic fit.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Number of folds; 0 means leave-one-out.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Refit the registration model inside every fold.
    #[arg(long)]
    pub full_pipeline: bool,
    #[command(flatten)]
    pub flags: FitFlags,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    /// Dataset for `curves` and `registered`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fit directory for `registered`, `components`, `warps` and `beta`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// Logistic model JSON for `beta`.
    #[arg(long)]
    pub logistic: Option<PathBuf>,
    /// Multiple of the component standard deviation for `components`.
    #[arg(long, default_value_t = 2.0)]
    pub scale: f64,
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::parse_from(&args);
    init_logging(cli.verbose);
    let arguments = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    commands::dispatch(cli, arguments)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).try_init();
}
