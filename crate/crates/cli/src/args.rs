use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "svqa", version, about = "Saliency-weighted stereoscopic video quality toolkit")]
pub struct Cli {
    /// Worker threads for frame-parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Full-reference score of a distorted sequence against its reference.
    ScoreFr(ScoreFrArgs),
    /// No-reference score of a single sequence.
    ScoreNr(ScoreNrArgs),
    /// Compute baseline saliency maps as a PGM series.
    Saliency(SaliencyArgs),
    /// Estimate disparity maps as a PGM series.
    Disparity(DisparityArgs),
    /// Apply a distortion spec to a sequence.
    Distort(DistortArgs),
    /// Correlate objective reports with subjective scores.
    Evaluate(EvaluateArgs),
    /// Print dimensions, frame count and SI/TI of a sequence.
    Info(InfoArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Sources {
    /// none | uniform | baseline | dir:<path>
    #[arg(long, default_value = "none")]
    pub saliency: String,

    /// estimate | dir:<path>. Full-reference runs read `<path>/ref` and
    /// `<path>/dist`. Defaults to estimate when the metric needs it.
    #[arg(long)]
    pub disparity: Option<String>,

    /// JSON tool configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScoreFrArgs {
    #[arg(long)]
    pub metric: String,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub dist: PathBuf,
    #[command(flatten)]
    pub sources: Sources,
    /// Report JSON; the per-frame CSV is written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ScoreNrArgs {
    #[arg(long)]
    pub metric: String,
    #[arg(long)]
    pub dist: PathBuf,
    #[command(flatten)]
    pub sources: Sources,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SaliencyArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// estimate | dir:<path>; adds a depth channel.
    #[arg(long)]
    pub disparity: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the map series.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DisparityArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DistortArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Distortion spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Output descriptor; raw views are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MappingArg {
    Raw,
    Logistic,
}

#[derive(Args, Debug, Clone)]
pub struct EvaluateArgs {
    /// CSV with item_id,subject_id,score.
    #[arg(long)]
    pub scores: PathBuf,
    /// Metric report JSON files.
    #[arg(long, num_args = 1.., required = true)]
    pub objective: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "raw")]
    pub mapping: MappingArg,
    /// Label for the distortion column.
    #[arg(long, default_value = "all")]
    pub distortion: String,
    /// perf.csv or perf.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct InfoArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
