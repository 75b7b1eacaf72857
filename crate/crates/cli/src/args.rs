use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use truthlens::domain::{DEFAULT_DELTA, DEFAULT_SEED};
use truthlens::models::ModelSource;
use truthlens::{EvalConfig, NoiseLevel};

#[derive(Debug, Parser)]
#[command(
    name = "truthlens",
    version,
    about = "Check whether feature-importance explanations agree with the model they explain"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-feature min/max/mean/std of a dataset
    Stats(StatsArgs),
    /// Produce seed explanations for every instance of a dataset
    Explain(ExplainArgs),
    /// Judge explanations with the truthfulness check
    Evaluate(EvaluateArgs),
    /// Combine several explanations per instance into one
    Meta(MetaArgs),
    /// Build argument trees justifying evaluation verdicts
    Argue(ArgueArgs),
    /// Untruthful counts per explainer across noise levels and tolerances
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write JSON here instead of stdout
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset file (.csv for tabular data, otherwise JSON)
    #[arg(long)]
    pub data: PathBuf,

    /// Feature statistics from `stats`; computed from the dataset when absent
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// builtin:<spec.json>, http:<url> or exec:<command>
    #[arg(long)]
    pub model: ModelSource,

    /// Extra attempts after a transport failure of an external model
    #[arg(long, default_value_t = 0)]
    pub retries: u32,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long, env = "TRUTHLENS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Clamp image alterations into the observed range (default)
    #[arg(long = "clamp-images", overrides_with = "no_clamp_images")]
    pub clamp_images: bool,

    #[arg(long = "no-clamp-images", overrides_with = "clamp_images")]
    pub no_clamp_images: bool,

    /// Clamp time-series alterations into the observed range
    #[arg(long = "clamp-timeseries", overrides_with = "no_clamp_timeseries")]
    pub clamp_timeseries: bool,

    #[arg(long = "no-clamp-timeseries", overrides_with = "clamp_timeseries")]
    pub no_clamp_timeseries: bool,
}

impl ProbeArgs {
    pub fn config(&self, noise_level: NoiseLevel, delta: f64) -> EvalConfig {
        EvalConfig {
            noise_level,
            delta,
            seed: self.seed,
            clamp_images: !self.no_clamp_images,
            clamp_timeseries: self.clamp_timeseries,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// weak, normal or strong
    #[arg(long, default_value_t = NoiseLevel::Normal)]
    pub noise: NoiseLevel,

    /// Prediction changes up to this size count as stable
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,

    #[command(flatten)]
    pub probe: ProbeArgs,
}

impl EvalArgs {
    pub fn config(&self) -> EvalConfig {
        self.probe.config(self.noise, self.delta)
    }
}

#[derive(Debug, Args)]
pub struct ParallelArgs {
    /// Worker threads; output order never depends on it
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ExactLinear,
    Random,
    Surrogate,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_enum)]
    pub method: Method,

    /// Required for exact-linear (a builtin linear spec) and surrogate
    #[arg(long)]
    pub model: Option<ModelSource>,

    #[arg(long, default_value_t = 0)]
    pub retries: u32,

    #[arg(long, env = "TRUTHLENS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Surrogate neighbourhood size
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,

    /// Surrogate kernel width; 0.75·sqrt(features) when absent
    #[arg(long)]
    pub kernel_width: Option<f64>,

    /// Surrogate ridge penalty
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,

    #[command(flatten)]
    pub parallel: ParallelArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub data: DataArgs,

    /// Explanation files
    #[arg(long, required = true, num_args = 1..)]
    pub explanations: Vec<PathBuf>,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub parallel: ParallelArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Truthful,
    Mean,
    Median,
}

#[derive(Debug, Args)]
pub struct MetaArgs {
    #[arg(long, value_enum, default_value_t = Strategy::Truthful)]
    pub strategy: Strategy,

    /// Explanations with precomputed truthful marks and average changes
    #[arg(long, conflicts_with_all = ["model", "data", "explanations"])]
    pub marked: Option<PathBuf>,

    #[arg(long)]
    pub model: Option<ModelSource>,

    #[arg(long, default_value_t = 0)]
    pub retries: u32,

    #[arg(long)]
    pub data: Option<PathBuf>,

    #[arg(long)]
    pub stats: Option<PathBuf>,

    #[arg(long, num_args = 1..)]
    pub explanations: Vec<PathBuf>,

    #[command(flatten)]
    pub eval: EvalArgs,

    #[command(flatten)]
    pub parallel: ParallelArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Style {
    /// Predictions as percentages
    Percent,
    /// Predictions as plain numbers
    Raw,
}

#[derive(Debug, Args)]
pub struct ArgueArgs {
    /// Output of `evaluate`, a single report, or an array of reports
    #[arg(long)]
    pub report: PathBuf,

    #[arg(long, value_enum, default_value_t = Style::Percent)]
    pub style: Style,

    /// Write the text summary here; with --out and no --summary it goes to stdout
    #[arg(long)]
    pub summary: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, required = true, num_args = 1..)]
    pub explanations: Vec<PathBuf>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1e-4, 1e-3, 1e-2])]
    pub deltas: Vec<f64>,

    #[arg(long = "noise-levels", value_delimiter = ',', default_values_t = [NoiseLevel::Normal])]
    pub noise_levels: Vec<NoiseLevel>,

    /// Also score the truthful, mean and median ensembles of the inputs
    #[arg(long)]
    pub ensembles: bool,

    /// Complexity counts |score| above this; defaults to each row's delta
    #[arg(long)]
    pub complexity_threshold: Option<f64>,

    #[command(flatten)]
    pub probe: ProbeArgs,

    #[arg(long)]
    pub summary: Option<PathBuf>,

    #[command(flatten)]
    pub parallel: ParallelArgs,

    #[command(flatten)]
    pub output: OutputArgs,
}
