use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mpm", version, about = "Encode, track and evaluate cells with motion-and-position maps")]
pub struct Cli {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write ground-truth fields for every frame pair of an annotation file.
    Encode(EncodeArgs),
    /// Track cells through a sequence of fields.
    Track(TrackArgs),
    /// Score predicted tracks against annotations.
    Eval(EvalArgs),
    /// Generate a synthetic annotated sequence.
    Simulate(SimulateArgs),
    /// Draw tracks as a PNG image.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EncoderArgs {
    /// Gaussian width in pixels.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Support radius in pixels [default: 4 sigma].
    #[arg(long)]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long, value_name = "CSV")]
    pub annotations: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    /// Frame gap of the written pairs.
    #[arg(long, conflicts_with = "max_gap")]
    pub gap: Option<u32>,
    /// Write every gap from 1 to this value, e.g. the tracker's q.
    #[arg(long)]
    pub max_gap: Option<u32>,
}

#[derive(Debug, Args)]
pub struct TrackerArgs {
    /// Largest frame gap bridged by recovery.
    #[arg(long)]
    pub q: Option<u32>,
    /// Frames a lost track stays eligible for recovery.
    #[arg(long)]
    pub max_age: Option<u32>,
    /// Likelihood at or below which a decoded source counts as empty.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub no_recovery: bool,
    #[arg(long)]
    pub smooth_sigma: Option<f64>,
    /// Minimum smoothed likelihood of a detection.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Half-width of the peak suppression window.
    #[arg(long)]
    pub min_separation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub drop_prob: Option<f64>,
    #[arg(long)]
    pub max_drops: Option<u32>,
    #[arg(long)]
    pub vector_noise: Option<f64>,
    /// Mean spurious blobs per field.
    #[arg(long)]
    pub clutter: Option<f64>,
    /// Restrict drops to these frames.
    #[arg(long, value_delimiter = ',')]
    pub drop_frames: Option<Vec<u32>>,
    #[arg(long)]
    pub noise_seed: Option<u64>,
}

impl NoiseArgs {
    pub fn any(&self) -> bool {
        self.drop_prob.is_some()
            || self.max_drops.is_some()
            || self.vector_noise.is_some()
            || self.clutter.is_some()
            || self.drop_frames.is_some()
            || self.noise_seed.is_some()
    }
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Encode fields on the fly from this annotation file.
    #[arg(long, value_name = "CSV", required_unless_present = "fields", conflicts_with = "fields")]
    pub oracle: Option<PathBuf>,
    /// Read fields written by `mpm encode` from this directory.
    #[arg(long, value_name = "DIR")]
    pub fields: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    #[arg(long)]
    pub first: Option<u32>,
    #[arg(long)]
    pub last: Option<u32>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
    #[command(flatten)]
    pub tracker: TrackerArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "CSV")]
    pub truth: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub pred: PathBuf,
    /// Largest distance at which a prediction matches a target.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Match greedily by distance instead of optimally.
    #[arg(long)]
    pub greedy: bool,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub step_sigma: Option<f64>,
    #[arg(long)]
    pub max_step: Option<f64>,
    #[arg(long)]
    pub division_prob: Option<f64>,
    #[arg(long)]
    pub min_separation: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_name = "CSV")]
    pub tracks: PathBuf,
    #[arg(long, value_name = "PNG")]
    pub out: PathBuf,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Output pixels per grid pixel.
    #[arg(long)]
    pub scale: Option<u32>,
}
