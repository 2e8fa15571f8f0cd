use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "lightrig", version, about = "Multi-light inverse rendering workbench")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: all cores). Never changes output bytes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// key = value file; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a procedural dataset.
    Gen(GenArgs),
    /// Estimate a G-buffer from one sample's light images.
    Solve(SolveArgs),
    /// Relight a G-buffer under an environment map.
    Relight(RelightArgs),
    /// Score a predicted G-buffer against ground truth.
    Eval(EvalArgs),
    /// Sweep the number of light images over a dataset.
    Ablate(AblateArgs),
    /// Write an augmented copy of a sample.
    Augment(AugmentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RobustArg {
    None,
    Huber,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40)]
    pub scenes: usize,
    #[arg(long, default_value_t = 2)]
    pub views: usize,
    #[arg(long, default_value_t = 256)]
    pub res: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub sample: PathBuf,
    /// Comma-separated light indices (default: all).
    #[arg(long, value_delimiter = ',', action = ArgAction::Set)]
    pub lights: Option<Vec<usize>>,
    /// Default: huber for augmented samples, none otherwise.
    #[arg(long, value_enum)]
    pub robust: Option<RobustArg>,
    #[arg(long)]
    pub out: PathBuf,
    /// Solver parameter override, KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RelightArgs {
    /// Directory with G-buffer maps and `camera.json` or `sample.json`.
    #[arg(long)]
    pub gbuffer: PathBuf,
    /// Equirectangular PFM environment (default: procedural sky).
    #[arg(long)]
    pub env: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub spp: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// sRGB PNG output; the linear image goes next to it as `.pfm`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Light counts to evaluate, strictly increasing.
    #[arg(long, value_delimiter = ',', action = ArgAction::Set, default_values_t = [1usize, 3, 6, 9])]
    pub counts: Vec<usize>,
    #[arg(long, value_enum, default_value_t = RobustArg::None)]
    pub robust: RobustArg,
    /// Solver parameter override, KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Augmentation parameter override, KEY=VALUE (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}
