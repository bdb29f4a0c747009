//! `splatprune` command-line tool.

mod commands;
mod failures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Render, diagnose and prune floaters in 3D gaussian splat scenes.
///
/// Scenes are binary little-endian PLY files in the layout written by 3D
/// Gaussian Splatting; cameras are the matching `cameras.json`.
///
/// The training-loss weights lambda_depth and lambda_SDS are reserved:
/// training is out of scope for this tool, so no subcommand accepts them.
#[derive(Parser, Debug)]
#[command(name = "splatprune", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render colour, alpha-blended depth and mode depth for every camera.
    Render(RenderArgs),
    /// Report per-view relative depth differences, dip values and thresholds
    /// without changing the scene.
    Diagnose(DiagnoseArgs),
    /// Detect floaters in every view and write the repaired scene.
    Prune(PruneArgs),
    /// PSNR/SSIM of rendered images against ground truth, plus the patch
    /// Pearson depth loss when source depth maps are given.
    Metrics(MetricsArgs),
    /// Generate novel cameras by rotating training cameras about the
    /// estimated up-axis.
    Poses(PosesArgs),
    /// Write one of the built-in synthetic scenes (plane, plane+floater, ray4).
    Toy(ToyArgs),
}

#[derive(Args, Debug, Clone)]
struct SceneInputs {
    /// Input scene (PLY).
    #[arg(long)]
    scene: PathBuf,
    /// Camera file (JSON).
    #[arg(long)]
    cameras: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct RenderFlags {
    /// Tile edge length in pixels.
    #[arg(long, default_value_t = 16)]
    tile_size: usize,
    /// Background colour as `r,g,b` in [0, 1].
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 0.0])]
    background: Vec<f64>,
}

#[derive(Args, Debug, Clone)]
struct PruneFlags {
    /// Percentile at zero average dip.
    #[arg(long, default_value_t = 97.0)]
    a: f64,
    /// Decay of the percentile with the average dip (negative).
    #[arg(long, default_value_t = -8.0, allow_negative_numbers = true)]
    b: f64,
    /// Minimum alpha of a gaussian at a masked pixel for it to be selected
    /// (default 1/255).
    #[arg(long, default_value_t = 1.0 / 255.0)]
    power_thresh: f64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    inputs: SceneInputs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Args, Debug)]
struct DiagnoseArgs {
    #[command(flatten)]
    inputs: SceneInputs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Histogram bins per view.
    #[arg(long, default_value_t = 64)]
    bins: usize,
    #[command(flatten)]
    prune: PruneFlags,
    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Args, Debug)]
struct PruneArgs {
    #[command(flatten)]
    inputs: SceneInputs,
    /// Repaired scene (PLY). Must differ from the input scene.
    #[arg(long)]
    out: PathBuf,
    /// Directory for per-view difference maps, masks and the report.
    #[arg(long)]
    report_dir: Option<PathBuf>,
    #[command(flatten)]
    prune: PruneFlags,
    #[command(flatten)]
    render: RenderFlags,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Directory of rendered PNGs (and `<stem>_d_alpha.pfm` depth maps).
    #[arg(long)]
    rendered: PathBuf,
    /// Directory of ground-truth PNGs with matching file names.
    #[arg(long)]
    gt: PathBuf,
    /// Directory of source (e.g. monocular) depth maps `<stem>.pfm`.
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Which rendered depth to compare: `alpha` or `mode`.
    #[arg(long, default_value = "alpha")]
    depth_kind: String,
    /// Patch side length in pixels.
    #[arg(long, default_value_t = 128)]
    box_size: usize,
    /// Fraction of the patch tiling that is sampled.
    #[arg(long, default_value_t = 0.5)]
    p_corr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the table here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PosesArgs {
    /// Training camera file (JSON).
    #[arg(long)]
    cameras: PathBuf,
    /// Output camera file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Number of cameras to generate.
    #[arg(long)]
    k: usize,
    /// Smallest rotation angle in degrees.
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    theta_min: f64,
    /// Largest rotation angle in degrees.
    #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
    theta_max: f64,
    /// Rotation column used as each camera's up-vector.
    #[arg(long, default_value_t = 0)]
    up_column: usize,
    /// Point the rotation axis passes through, as `x,y,z`.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    center: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ToyArgs {
    /// `plane`, `plane+floater` or `ray4`.
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for `scene.ply`, `cameras.json` and `labels.csv`.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Render(args) => commands::render(args),
        Command::Diagnose(args) => commands::diagnose(args),
        Command::Prune(args) => commands::prune(args),
        Command::Metrics(args) => commands::metrics(args),
        Command::Poses(args) => commands::poses(args),
        Command::Toy(args) => commands::toy(args),
    };
    match result {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            failures.report();
            ExitCode::FAILURE
        }
        Err(e) => {
            failures::Failures::single("run", format!("{e:#}")).report();
            ExitCode::FAILURE
        }
    }
}
