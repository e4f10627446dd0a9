use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::RunConfig;
use crate::mrsde::ScheduleKind;
use crate::phantoms_data::PhantomKind;
use crate::pipeline::MuSource;

#[derive(Debug, Parser)]
#[command(
    name = "lact",
    version,
    about = "Limited-angle CT sinogram completion with a mean-reverting diffusion prior"
)]
pub struct Cli {
    /// TOML file with run settings; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate phantoms, simulate limited-angle acquisitions and write a dataset.
    Simulate(SimulateArgs),
    /// Fit a per-step linear denoiser on simulated training data.
    Fit(FitArgs),
    /// Complete the sinograms of a dataset and write per-record outputs.
    Reconstruct(ReconstructArgs),
    /// Compare reconstructions with the dataset ground truth.
    Eval(EvalArgs),
    /// Run the beta x noise-estimate error grid.
    Sweep(SweepArgs),
    /// Print the effective configuration as TOML.
    ShowConfig,
}

#[derive(Debug, Args, Default)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub phantom: Option<PhantomKind>,
    /// Image width and height in pixels.
    #[arg(long)]
    pub size: Option<usize>,
    /// SNR range in dB (LO HI); a single SNR is given as `--snr 10 10`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub snr: Option<Vec<f64>>,
    #[arg(long)]
    pub full_views: Option<usize>,
    /// Window of candidate angles in degrees (LO HI).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub range: Option<Vec<f64>>,
    /// Number of measured angles drawn from the window.
    #[arg(long)]
    pub angles: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub steps: Option<usize>,
    /// Stationary standard deviation of the diffusion.
    #[arg(long = "lambda")]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub schedule: Option<ScheduleKind>,
    #[arg(long)]
    pub zeta_total: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct GuidanceArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    /// Fixed noise-std estimate (default: each record's own sigma_y).
    #[arg(long)]
    pub sigma_y: Option<f64>,
    /// Enable or disable time-travel resampling.
    #[arg(long, value_name = "BOOL")]
    pub time_travel: Option<bool>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub rectify_every: Option<usize>,
    /// Unguided baseline: no range-space correction.
    #[arg(long)]
    pub no_rectify: bool,
    /// Use the reprojected FBP of the observation as the diffusion mean.
    #[arg(long)]
    pub mu_from_fbp: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Linear denoiser written by `lact fit`.
    #[arg(long, conflicts_with = "oracle")]
    pub model: Option<PathBuf>,
    /// Use the ground-truth sinogram as the clean estimate.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub count: Option<usize>,
    /// Store the phantom image with each record.
    #[arg(long)]
    pub keep_phantom: bool,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub examples: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub mu_from_fbp: bool,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
    /// Also write PNG previews of the sinogram and FBP image.
    #[arg(long)]
    pub png: bool,
    /// Dump the per-step clean estimates of each record.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Directory written by `lact reconstruct`, or a dataset file whose
    /// ground truth is used as the reconstruction.
    #[arg(long)]
    pub recon: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub guidance: GuidanceArgs,
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub errors: Option<Vec<f64>>,
    #[arg(long)]
    pub runs: Option<usize>,
}

impl ProtocolArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.protocol;
        if let Some(v) = self.phantom {
            p.phantom = v;
        }
        if let Some(v) = self.size {
            p.size = v;
        }
        if let Some(v) = &self.snr {
            p.snr_db = [v[0], v[1]];
        }
        if let Some(v) = self.full_views {
            p.full_view_count = v;
        }
        if let Some(v) = &self.range {
            p.limited_range = [v[0], v[1]];
        }
        if let Some(v) = self.angles {
            p.limited_count = v;
        }
    }
}

impl ScheduleArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.schedule;
        if let Some(v) = self.steps {
            s.steps = v;
        }
        if let Some(v) = self.lambda {
            s.lambda = v;
        }
        if let Some(v) = self.schedule {
            s.kind = v;
        }
        if let Some(v) = self.zeta_total {
            s.zeta_total = v;
        }
    }
}

impl GuidanceArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let g = &mut cfg.guidance;
        if let Some(v) = self.beta {
            g.beta = v;
        }
        if self.sigma_y.is_some() {
            g.sigma_y = self.sigma_y;
        }
        if let Some(v) = self.time_travel {
            g.time_travel = v;
        }
        if let Some(v) = self.hop {
            g.hop = v;
        }
        if let Some(v) = self.repeats {
            g.repeats = v;
        }
        if let Some(v) = self.rectify_every {
            g.rectify_every = v;
        }
        if self.no_rectify {
            g.rectify = false;
        }
        if self.mu_from_fbp {
            g.mu = MuSource::Fbp;
        }
    }
}
