mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Numerical lab for continuity no-go constructions against ψ-epistemic models.
#[derive(Debug, Parser)]
#[command(name = "psi-gauge", version)]
pub struct Cli {
    /// Master seed; every random stream of the run derives from it.
    #[arg(long, global = true, env = "PSI_GAUGE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// d-state exclusion ensemble in dimension d, measured with finite shots.
    Thm1(Thm1Args),
    /// n-copy ensemble built from a single-copy family in dimension d.
    Thm2(Thm2Args),
    /// Rotated states at fidelity t from the uniform superposition.
    Thm4(Thm4Args),
    /// Checks on a builtin or user-supplied ontological model.
    Model(ModelArgs),
    /// Growth of the stabilizer orbit on the Bloch sphere.
    Orbit(OrbitArgs),
    /// Resources needed to rule out continuity at given radii.
    Scaling(ScalingArgs),
    /// Numerical search for an exclusion measurement.
    Exclusion(ExclusionArgs),
    /// Protocol runs over a parameter grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    /// Shots per preparation.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    /// Depolarizing probability applied to each preparation.
    #[arg(long, default_value_t = 0.0)]
    pub noise_p: f64,
    /// Probability that a recorded outcome is replaced by a uniform one.
    #[arg(long, default_value_t = 0.0)]
    pub noise_q: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm1Args {
    #[arg(long = "dim", value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Also write the ensemble (states, measurement, center) as JSON.
    #[arg(long)]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm2Args {
    #[arg(long = "dim", default_value_t = 3, value_parser = clap::value_parser!(u64).range(3..))]
    pub dim: u64,
    /// Number of copies n.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub copies: u64,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Thm4Args {
    #[arg(long = "dim", value_parser = clap::value_parser!(u64).range(2..))]
    pub dim: u64,
    /// Fidelity with the uniform superposition; defaults to the largest
    /// admissible value sqrt((d-1)/d).
    #[arg(long)]
    pub t: Option<f64>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub ensemble_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Builtin {
    /// Kochen–Specker qubit model on a Fibonacci grid.
    Ks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Validate,
    Reproduce,
    Classify,
    Epsilon,
    Nogo,
    Continuity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Center {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "file"])))]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub builtin: Option<Builtin>,
    /// Model JSON: {"lambda_count", "preparations", "responses"}.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Checks to run (repeatable or comma separated).
    #[arg(long, value_enum, value_delimiter = ',', default_value = "validate")]
    pub check: Vec<Check>,
    /// Grid size of the builtin model.
    #[arg(long, default_value_t = 100_000)]
    pub grid: usize,
    /// Ball radius for the continuity probe.
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Qubit center for the continuity probe and the classified pair.
    #[arg(long, value_enum, default_value_t = Center::Plus)]
    pub center: Center,
    /// Random ball samples of the continuity probe.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// State/measurement pairs for the Born-rule reproduction check.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Fidelity |<a|b>| of the pair classified on the builtin model.
    #[arg(long, default_value_t = 0.9)]
    pub fidelity: f64,
    /// Preparation labels of a file model to compare (default: all, sorted).
    #[arg(long, value_delimiter = ',')]
    pub preparations: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OrbitArgs {
    /// Bloch angle between the two initial states, in radians.
    #[arg(long)]
    pub theta: f64,
    /// Maximum number of generations.
    #[arg(long, default_value_t = 3)]
    pub steps: usize,
    /// Stop at the first generation whose coverage reaches this value.
    #[arg(long)]
    pub target: Option<f64>,
    /// Reference grid size for coverage.
    #[arg(long, default_value_t = psi_gauge::orbit::DEFAULT_COVERAGE_GRID)]
    pub grid: usize,
    /// Angular tolerance for coverage, in radians.
    #[arg(long, default_value_t = 0.1)]
    pub tol: f64,
    /// Also write the final cloud as a JSON list of [x, y, z].
    #[arg(long)]
    pub points_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    /// Target radii (repeatable or comma separated).
    #[arg(long, required = true, value_delimiter = ',')]
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExclusionArgs {
    /// JSON list of states, or any object with a "states" list (e.g. an
    /// ensemble written by --ensemble-out).
    #[arg(long)]
    pub states: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Thm1,
    Thm2,
    Thm4,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long = "dims", required = true, value_delimiter = ',')]
    pub dims: Vec<usize>,
    /// Copy counts (thm2 only).
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub copies: Vec<usize>,
    /// Depolarizing probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub noise_p: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_q: f64,
    /// Fidelity for thm4 (default: largest admissible per dimension).
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
