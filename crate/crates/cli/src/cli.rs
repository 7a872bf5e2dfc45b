use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "u2vsim", version, about = "UAV-to-vehicle mmWave channel simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic ray-tracing corpus for a scenario.
    GenData(GenDataArgs),
    /// Train a delay-to-power network on a ray corpus.
    TrainBpnn(TrainBpnnArgs),
    /// Train an angle-offset generator on one offsets column.
    TrainGan(TrainGanArgs),
    /// Cluster rays and extract per-ray angle offsets.
    Cluster(ClusterArgs),
    /// Generate the time-variant channel for a scenario.
    Simulate(SimulateArgs),
    /// Compute channel statistics from a CIR dump.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Scenario file, or `bundled:<name>`.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 500)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rays per NLoS path; defaults to the scenario value.
    #[arg(long)]
    pub rays: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Link {
    Los,
    Nlos,
}

#[derive(Debug, Args)]
pub struct TrainBpnnArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub link: Link,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 5000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Mini-batch size; 0 trains on the full batch.
    #[arg(long, default_value_t = 8)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 4)]
    pub hidden: usize,
    /// Optional per-epoch history CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainGanArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "d_azimuth")]
    pub column: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 2e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 8)]
    pub noise_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generated samples used for the KS report.
    #[arg(long, default_value_t = 10_000)]
    pub eval_samples: usize,
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KChoice {
    /// Elbow selection over the k range.
    Auto,
    /// Number of distinct path ids (per-channel mode only).
    Paths,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AngleSide {
    Arrival,
    Departure,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    #[arg(long, default_value_t = 25)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0.15)]
    pub sse_threshold: f64,
    #[arg(long, default_value_t = 0.005)]
    pub slope_threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cluster each channel separately, NLoS rays only.
    #[arg(long)]
    pub per_channel: bool,
    #[arg(long, value_enum, default_value = "auto")]
    pub k: KChoice,
    #[arg(long, value_enum, default_value = "arrival")]
    pub angles: AngleSide,
    #[arg(long)]
    pub out_offsets: Option<PathBuf>,
    #[arg(long)]
    pub out_curve: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub bpnn_los: Option<PathBuf>,
    #[arg(long)]
    pub bpnn_nlos: Option<PathBuf>,
    #[arg(long)]
    pub gan_az: Option<PathBuf>,
    #[arg(long)]
    pub gan_el: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub start: Option<f64>,
    #[arg(long)]
    pub stop: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Pdp,
    Acf,
    Ccf,
    Dpsd,
    Stcf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    Mc,
    Exact,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub cir: PathBuf,
    /// Scenario the dump was generated from (carrier, motion, attitude).
    #[arg(long)]
    pub scenario: String,
    #[arg(long, value_enum)]
    pub which: Which,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference snapshot time (window centre for dpsd).
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub pair: usize,
    /// Restrict to one path id.
    #[arg(long)]
    pub path: Option<u32>,
    /// Defaults to exact for dpsd and Monte Carlo otherwise.
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,
    #[arg(long, default_value_t = 100)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time lags in snapshot steps (acf, stcf).
    #[arg(long, default_value_t = 20)]
    pub lags: usize,
    /// Largest normalized spacing d / lambda (ccf, stcf).
    #[arg(long, default_value_t = 0.3)]
    pub max_spacing: f64,
    #[arg(long, default_value_t = 0.005)]
    pub spacing_step: f64,
    /// Body-frame spacing axis as `x,y,z`.
    #[arg(long, default_value = "0,1,0", value_parser = parse_vec3)]
    pub axis: [f64; 3],
    /// Ignore the attitude profile when placing antenna spacings.
    #[arg(long)]
    pub no_attitude: bool,
    /// DPSD window length in seconds; defaults to 64 snapshot steps.
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, default_value_t = 8192)]
    pub fft: usize,
    /// Frequency of the delay term in correlations.
    #[arg(long, default_value_t = 0.0)]
    pub freq: f64,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected three comma-separated numbers".to_string())
}
