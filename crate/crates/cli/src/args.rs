use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "qusum",
    version,
    about = "Quickest change detection on block-measured quantum streams"
)]
#[command(subcommand_required = false, arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads for Monte Carlo loops (results do not depend on it).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Suppress the one-line summary on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,

    /// Re-run the configuration recorded in a previous output (instead of a subcommand).
    #[arg(long, value_name = "CONFIG")]
    pub replay: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build the block measurement for a pre-change state.
    PvmBuild(PvmBuildArgs),
    /// Per-copy induced divergence against the quantum relative entropy, by block length.
    EntropyGap(EntropyGapArgs),
    /// Outcome distributions induced by the block measurement.
    Induce(InduceArgs),
    /// Run a detector over a recorded outcome stream.
    Detect(DetectArgs),
    /// Find the threshold that meets a mean false-alarm time.
    Calibrate(CalibrateArgs),
    /// Audit the windowed estimator's KL loss and second moment.
    Conditions(ConditionsArgs),
    /// Delay against false-alarm time over a grid of operating points.
    Sweep(SweepArgs),
    /// Summarize a sweep output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementKind {
    /// Eigenvalue classes refined by symmetric-group isotypic components.
    Isotypic,
    /// Eigenvalue classes only.
    TypeOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorChoice {
    /// Window-limited CUSUM with an estimated post-change distribution.
    Nwla,
    /// CUSUM with the post-change distribution known.
    #[value(alias = "cusum")]
    OracleCusum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyChoice {
    Uniform,
    /// Random distribution with every entry at least w^{-1/2}.
    #[value(alias = "random")]
    RandomFloor,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct PvmBuildArgs {
    /// Pre-change density operator (JSON).
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub ell: usize,
    #[arg(long, value_enum, default_value_t = MeasurementKind::Isotypic)]
    pub kind: MeasurementKind,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct EntropyGapArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long)]
    pub ell_max: usize,
    #[arg(long, value_enum, default_value_t = MeasurementKind::Isotypic)]
    pub kind: MeasurementKind,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InduceArgs {
    #[arg(long)]
    pub rho: PathBuf,
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long)]
    pub ell: usize,
    #[arg(long, value_enum, default_value_t = MeasurementKind::Isotypic)]
    pub kind: MeasurementKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DetectArgs {
    /// Model JSON: {"labels"?, "p", "q"?, "w"?, "h"?}.
    #[arg(long)]
    pub model: PathBuf,
    /// One outcome per line, as a label or a 0-based index.
    #[arg(long)]
    pub stream: PathBuf,
    /// Read this 0-based comma-separated column instead of whole lines.
    #[arg(long)]
    pub column: Option<usize>,
    #[arg(long, value_enum, default_value_t = DetectorChoice::Nwla)]
    pub detector: DetectorChoice,
    /// Overrides the model's window.
    #[arg(long)]
    pub window: Option<usize>,
    /// Overrides the model's threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Stop reading after this many outcomes.
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Per-step statistic as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Target mean false-alarm time in blocks; defaults to the scenario's.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long, value_enum, default_value_t = DetectorChoice::Nwla)]
    pub detector: DetectorChoice,
    /// Defaults to the scenario's.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Defaults to the scenario's; one of the two is required.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ConditionsArgs {
    #[arg(long, value_enum, default_value_t = FamilyChoice::Uniform)]
    pub family: FamilyChoice,
    /// Comma-separated window sizes.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "64,256,1024,4096")]
    pub w_list: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    /// Support size is ceil(m·√w); defaults to 1 (uniform) or 0.5 (random-floor).
    #[arg(long)]
    pub d_multiplier: Option<f64>,
    /// Directory for conditions.csv and conditions.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Comma-separated target false-alarm times (blocks), each calibrated.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with = "h", required_unless_present = "h")]
    pub tfa: Option<Vec<f64>>,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub h: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = DetectorChoice::Nwla)]
    pub detector: DetectorChoice,
    /// Defaults to the scenario's.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Defaults to the scenario's; one of the two is required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for curve.csv and summary.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// A sweep output directory.
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
