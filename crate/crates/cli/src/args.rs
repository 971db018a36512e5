use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Synthetic colonoscopy reconstruction pipeline.
#[derive(Debug, Parser)]
#[command(name = "colonorm", version)]
pub struct Cli {
    /// Pipeline configuration (TOML or JSON); command-line flags take precedence.
    #[arg(long, global = true, env = "COLONORM_CONFIG")]
    pub config: Option<PathBuf>,

    /// Worker threads for frame-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a phantom dataset: RGB, depth, normals, poses and a manifest.
    Render(RenderArgs),
    /// Evaluate the initialization loss on a frame pair.
    Losses(LossesArgs),
    /// Run multi-scale normal refinement on every frame.
    Refine(RefineArgs),
    /// Fuse posed depth maps into a mesh and report coverage holes.
    Fuse(FuseArgs),
    /// Compare predicted depth (and optionally a mesh) with ground truth.
    Evaluate(EvaluateArgs),
    /// Print table rows from evaluation reports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum View {
    DownTheBarrel,
    EnFace,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub view: Option<View>,
    #[arg(long)]
    pub fold_amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LossesArgs {
    /// Dataset directory written by `render`.
    #[arg(long)]
    pub data: PathBuf,
    /// Target and source frame ids.
    #[arg(long, num_args = 2, value_names = ["T", "S"])]
    pub pair: Vec<usize>,
    /// Directory with predicted `depth_NNNN.pfm` / `normals_NNNN.pfm` to use
    /// instead of ground truth.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Write per-pixel loss maps as PFM next to the report.
    #[arg(long)]
    pub dump_maps: bool,
    /// Output directory for the report and maps (default: print to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub lambda3: Option<f64>,
    #[arg(long)]
    pub lambda4: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `flat`, a depth PFM used for every frame, or a directory of per-frame
    /// `depth_NNNN.pfm` files.
    #[arg(long, default_value = "flat")]
    pub init: String,
    /// Number of refinement passes.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Restrict to these frame ids.
    #[arg(long, value_delimiter = ',')]
    pub frames: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Dataset directory with manifest and trajectory.
    #[arg(long)]
    pub frames: PathBuf,
    /// Directory of `depth_NNNN.pfm` to fuse instead of the dataset's depth.
    #[arg(long)]
    pub depth: Option<PathBuf>,
    #[arg(long)]
    pub voxel_size: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of predicted `depth_NNNN.pfm` (and optionally `mesh.ply`,
    /// `trajectory.txt`).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth dataset directory (and optionally `mesh.ply`).
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Split frames into this many contiguous folds; each frame is its own
    /// fold when absent.
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report files.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
}
