use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dbs_core::params::DEFAULT_GATE_TIME;
use dbs_core::RawChannelParams;

#[derive(Debug, Parser)]
#[command(
    name = "dbs",
    version,
    about = "Data basis shuffling: analytic budgets, Monte Carlo and speckle runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form DBS and IPBE error and eavesdropper budgets over a sweep
    Analytic(AnalyticArgs),
    /// Monte Carlo sessions over a sweep, with the analytic values alongside
    Simulate(SimulateArgs),
    /// Fiber focusing and PD/PD2 maps in matched and mismatched bases
    Speckle(SpeckleArgs),
    /// Pairing count C for an n-photon stream, 1/C and 2^-n
    Combinatorics(CombinatoricsArgs),
    /// Gate time that puts a loss crossover at a given loss
    CalibrateTau(CalibrateArgs),
    /// Re-run the command recorded in a manifest
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    #[arg(long, default_value_t = 16)]
    pub dimension: usize,
    /// Total transmission and detection efficiency η
    #[arg(long, default_value_t = 0.52)]
    pub efficiency: f64,
    /// Dark counts per second per detector
    #[arg(long, default_value_t = 300.0)]
    pub dark_rate: f64,
    /// Detector gate time τ in seconds
    #[arg(long, default_value_t = DEFAULT_GATE_TIME)]
    pub gate_time: f64,
    /// Mean photon number λ per pulse
    #[arg(long, default_value_t = 0.2)]
    pub mean_photon_number: f64,
    /// Use the calibrated gate time instead of --gate-time
    #[arg(long)]
    pub calibrated_tau: bool,
}

impl ChannelArgs {
    pub fn raw(&self) -> RawChannelParams {
        RawChannelParams {
            dimension: self.dimension,
            efficiency: self.efficiency,
            dark_rate: self.dark_rate,
            gate_time: self.gate_time,
            mean_photon_number: self.mean_photon_number,
            basis_count: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Dimension,
    Efficiency,
    DarkRate,
    GateTime,
    MeanPhotonNumber,
    /// 1 − efficiency
    Loss,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Dimension => "dimension",
            Axis::Efficiency => "efficiency",
            Axis::DarkRate => "dark_rate",
            Axis::GateTime => "gate_time",
            Axis::MeanPhotonNumber => "mean_photon_number",
            Axis::Loss => "loss",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Parameter to sweep
    #[arg(long, value_enum, requires = "values")]
    pub sweep: Option<Axis>,
    /// `start:stop:step` (inclusive) or a comma-separated list
    #[arg(long, requires = "sweep", allow_hyphen_values = true)]
    pub values: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// CSV output; stdout if absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolChoice {
    Dbs,
    Ipbe,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum, default_value_t = ProtocolChoice::Both)]
    pub protocol: ProtocolChoice,
    /// Run the photon-number-splitting eavesdropper instead of sessions
    #[arg(long)]
    pub pns: bool,
    /// Twins (DBS) or letters (IPBE) per parameter point
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Disable worker threads
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpeckleArgs {
    /// SLM segments S
    #[arg(long, default_value_t = 256)]
    pub segments: usize,
    /// Output modes (detector pixels) M
    #[arg(long, default_value_t = 289)]
    pub modes: usize,
    /// Mode to focus on; the central pixel if absent
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Photon pairs sampled per map
    #[arg(long, default_value_t = 1_000_000)]
    pub pairs: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CombinatoricsArgs {
    /// Photons in the stream (even)
    pub n: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 16)]
    pub dimension: usize,
    #[arg(long, default_value_t = 0.45)]
    pub target_loss: f64,
    #[arg(long, default_value_t = 500.0)]
    pub dark_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    pub mean_photon_number: f64,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    pub manifest: PathBuf,
    /// Where to write the new output (replaces the recorded --out)
    #[arg(long)]
    pub out: PathBuf,
}
