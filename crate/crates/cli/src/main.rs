use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gpr_strip::Error;

mod commands;

/// Synthetic GPR traces, layer-stripping inversion and bound checks for
/// layered media.
#[derive(Debug, Parser)]
#[command(name = "gpr-strip", version)]
struct Cli {
    /// Worker threads for the frequency-parallel loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the forward problem and write surface traces.
    Simulate(SimulateArgs),
    /// Reconstruct the layer staircase from surface traces.
    Invert(InvertArgs),
    /// Check the reflection and wavenumber bounds for a profile.
    Verify(VerifyArgs),
    /// Score a reconstruction report against the true profile.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Profile JSON.
    #[arg(long)]
    pub profile: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Number of samples, a power of two.
    #[arg(long, default_value_t = 1 << 18)]
    pub samples: usize,
    /// Use 2^24 samples.
    #[arg(long, conflicts_with = "samples")]
    pub paper_scale: bool,
    /// Sampling step, s.
    #[arg(long, default_value_t = 3e-10)]
    pub dt: f64,
    /// Ricker central frequency, Hz.
    #[arg(long, default_value_t = 2e8)]
    pub fc: f64,
    /// Source height (negative, m).
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    pub z0: f64,
    /// Ricker delay, s (default 3/fc).
    #[arg(long)]
    pub delay: Option<f64>,
    /// Minimum sub-cells per layer.
    #[arg(long, default_value_t = 64)]
    pub cells_per_layer: usize,
    /// Maximum sub-cell size in graded layers, m.
    #[arg(long, default_value_t = 0.02)]
    pub max_cell: f64,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    /// Trace CSV written by `simulate` (its JSON sidecar must sit next to it).
    #[arg(long)]
    pub trace: PathBuf,
    /// Output directory for report.json and staircase.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Relative permeability of the medium.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 8)]
    pub max_layers: usize,
    /// ω₂/ω₁, in [-1, 1-√2].
    #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
    pub omega2_ratio: f64,
    /// Impulse detection threshold, fraction of the envelope maximum.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub profile: PathBuf,
    /// ω₁ in rad/s (default 2π·fc).
    #[arg(long)]
    pub omega1: Option<f64>,
    /// Central frequency used when --omega1 is absent, Hz.
    #[arg(long, default_value_t = 2e8)]
    pub fc: f64,
    #[arg(long, default_value_t = -0.9, allow_hyphen_values = true)]
    pub omega2_ratio: f64,
    /// Reflection bound δ in (0, √2-1].
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Write the report JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also sweep ω₁, ω₂/ω₁ and δ and write one CSV row per layer and case.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    /// Random cases added to the sweep grid.
    #[arg(long, default_value_t = 0)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// report.json written by `invert`.
    #[arg(long)]
    pub report: PathBuf,
    /// The true profile JSON.
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    /// Also write the error table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub enum Failure {
    Lib(Error),
    BoundViolated,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Aliasing { .. } => 3,
        Error::InvalidProfile(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::Io(_)
        | Error::Format(_)
        | Error::Precondition(_)
        | Error::Sampling(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Invert(a) => commands::invert(a),
        Command::Verify(a) => commands::verify(a),
        Command::Compare(a) => commands::compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::BoundViolated) => {
            eprintln!("error: a bound was violated although its preconditions hold");
            ExitCode::from(4)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
