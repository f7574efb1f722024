use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "attrikit",
    version,
    about = "Label-free nuclei detection with attribute prompts and self-trained distillation"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Mock,
    Remote,
}

/// Flags shared by every command; each one overrides the config file.
#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model backend (default mock).
    #[arg(long, global = true, value_enum)]
    pub backend: Option<BackendArg>,
    /// Model gateway base URL for the remote backend.
    #[arg(long, global = true, env = "ATTRIKIT_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Seed for synthesis, tiling and mock models.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Dataset root directory.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// COCO file listing the images, relative to the dataset root.
    #[arg(long, global = true)]
    pub images: Option<PathBuf>,
    /// COCO ground truth, relative to the dataset root; enables metrics.
    #[arg(long, global = true)]
    pub truth: Option<PathBuf>,
    /// Prompts kept in the ranked sequence.
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    /// Weight of the distillation term in the student loss.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Self-training rounds after the teacher round.
    #[arg(long, global = true)]
    pub rounds: Option<usize>,
    /// Maximum pseudo boxes kept per image.
    #[arg(long, global = true)]
    pub cap: Option<usize>,
    /// Minimum score for a pseudo box.
    #[arg(long, global = true)]
    pub score_threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate attributes, augment them and rank the candidate prompts.
    Prompt,
    /// Zero-shot detection with a ranked prompt sequence; writes pseudo labels.
    Detect(DetectArgs),
    /// Self-trained distillation rounds starting from the pseudo labels.
    Distill(DistillArgs),
    /// Score predictions against ground truth.
    Eval(EvalArgs),
    /// Write a synthetic dataset with known truth.
    Synth(SynthArgs),
    /// Cut every image into overlapped tiles with one random crop each.
    Tile(TileArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Prompt sequence JSON; defaults to `<out>/prompt_sequence.json`.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    /// Render color-coded boxes over every image.
    #[arg(long)]
    pub overlays: bool,
}

#[derive(Debug, Args)]
pub struct DistillArgs {
    /// Round-0 pseudo labels; defaults to `<out>/pseudo_labels.json`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Continue from the rounds already under `<out>/rounds`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// COCO predictions: a full document or a results list.
    #[arg(long)]
    pub preds: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub count: Option<usize>,
    /// Square image side in pixels.
    #[arg(long)]
    pub size: Option<u32>,
    #[arg(long)]
    pub objects: Option<usize>,
    /// `sparse` or `dense`.
    #[arg(long)]
    pub density: Option<String>,
}

#[derive(Debug, Args)]
pub struct TileArgs {
    /// Square tile side in pixels.
    #[arg(long)]
    pub tile: Option<u32>,
    #[arg(long)]
    pub per_image: Option<u32>,
    /// Square crop side in pixels.
    #[arg(long)]
    pub crop: Option<u32>,
}
