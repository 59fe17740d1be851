use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gbayes", version, about = "Generalized Bayes shrinkage estimation, risk simulation and bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate θ from one observation (x, s).
    Estimate(EstimateArgs),
    /// Tabulate φ(w) and the shrink fraction over a log grid of w.
    Phi(PhiArgs),
    /// Monte Carlo risk curve over ‖θ‖.
    Risk(RiskArgs),
    /// Admissibility and minimaxity conditions over an (a, b) grid.
    Region(RegionArgs),
    /// Run the numerical verification suites.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Prior,
    Estimator,
    Blyth,
    Inequalities,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Prior => "prior",
            Suite::Estimator => "estimator",
            Suite::Blyth => "blyth",
            Suite::Inequalities => "inequalities",
        }
    }
}

/// Sampling dimensions and prior hyperparameters. Without `--a` and `--b`
/// the estimator is the simple minimax one: `a = ξ(p, n)`, `b = n/2 - a - 2`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Dimension of X.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Degrees of freedom of S.
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Prior hyperparameter a (default ξ(p, n)).
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Prior hyperparameter b (default n/2 - a - 2).
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Use c/(w + 1 + c) directly; requires b = n/2 - a - 2.
    #[arg(long)]
    pub closed_form: bool,
    /// Relative tolerance of the adaptive quadrature.
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Recorded in the output header; used by commands that sample.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Observation x as comma-separated values.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    pub x: Option<String>,
    /// Observation s (with --x).
    #[arg(long)]
    pub s: Option<f64>,
    /// File with one value per line: the p entries of x, then s.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub w_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub w_max: f64,
    #[arg(long, default_value_t = 64)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Comma-separated values of ‖θ‖ (θ is placed on the first axis).
    #[arg(long, default_value = "0,1,2,5,10,100")]
    pub theta_grid: String,
    /// Precision η = 1/σ².
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    /// Use δ(x, s) = x instead of the shrinkage estimator.
    #[arg(long)]
    pub identity: bool,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = -0.95, allow_negative_numbers = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub a_max: f64,
    /// Grid intervals along a (steps + 1 values).
    #[arg(long, default_value_t = 20)]
    pub a_steps: usize,
    #[arg(long, default_value_t = -0.45, allow_negative_numbers = true)]
    pub b_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub b_max: f64,
    #[arg(long, default_value_t = 20)]
    pub b_steps: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    pub suite: Suite,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random samples per inequality.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
