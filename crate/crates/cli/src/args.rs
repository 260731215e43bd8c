use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "periodyn", version, about = "Certify, simulate and compare periodic delayed neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Suppress the human-readable summary on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search weights for the existence condition, then the decay rate and bounds.
    Certify(CertifyArgs),
    /// Integrate from a constant history and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Locate the periodic orbit as a fixed point of the period map.
    FindPeriod(FindPeriodArgs),
    /// Evaluate the competing stability criteria, optionally on a random ensemble.
    Compare(CompareArgs),
    /// Fit the decay rate of the distance between two trajectory CSVs.
    Rate(RateArgs),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub config: PathBuf,
    /// Grid points per period for the pointwise checks.
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    /// Bisection tolerance of the decay rate.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
    #[arg(long, default_value_t = 20.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Constant history, comma separated; zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub ic: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also draw the trajectory as an SVG line chart.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Simulate even when the model is not certified.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct FindPeriodArgs {
    pub config: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    pub fp_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub h: f64,
    /// Constant starting history, comma separated; zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub ic: Option<String>,
    /// CSV of one period of the orbit.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Periods simulated from the orbit to measure its periodicity.
    #[arg(long, default_value_t = 3)]
    pub verify_periods: usize,
    /// Iterate even when the model is not certified.
    #[arg(long)]
    pub force: bool,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Model to compare; may be omitted with --ensemble.
    #[arg(required_unless_present = "ensemble")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    /// Also evaluate this many seeded random discrete-delay networks.
    #[arg(long)]
    pub ensemble: Option<usize>,
    #[arg(long, env = "PERIODYN_SEED", default_value_t = 7)]
    pub seed: u64,
    /// Random exponent draws for the quadratic-form criterion.
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Model whose certificate supplies the weights and the rate to compare with.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    pub grid: usize,
    /// Start of the fit window; a quarter of the horizon by default.
    #[arg(long)]
    pub from: Option<f64>,
}
