use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(
    name = "nclab",
    version,
    about = "Spectral triple experiments on finite truncations"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Command {
    /// Counting-function slope of a model spectrum.
    Dim(DimArgs),
    /// Slope of the model spectrum tensored with the number operator.
    CrossedDim(DimArgs),
    /// Commutator norms of α⁻ᵏ(f) against their envelope.
    Lip(LipArgs),
    /// Exact commutator scaling under the shift or the contraction w₀.
    Scaling(ScalingArgs),
    /// Covariance of the truncated representation and shift.
    Covariance(CovarianceArgs),
    /// Normal form of a word in U, U*, V, V*.
    Rewrite(RewriteArgs),
    /// Covering identities of the gasket on random points.
    GasketCover(GasketCoverArgs),
    /// Print the report schema version.
    ReportVersion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Nat,
    Torus,
    Rotation,
    Uhf,
    Gasket,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

/// Options shared by every experiment.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// key = value file; command-line flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here as well.
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Model,
    /// Cutoff of the number operator model.
    #[arg(long)]
    pub n: Option<usize>,
    /// Torus dimension.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Fourier cutoff.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// Covering matrix, rows separated by ';', e.g. "1,1;-1,1".
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Number of inductive-limit layers of the solenoid; 0 is the plain torus.
    #[arg(long, default_value_t = 0)]
    pub layers: u32,
    #[arg(long, default_value_t = 1)]
    pub p_theta: i64,
    #[arg(long, default_value_t = 3)]
    pub q: i64,
    /// Matrix size of the UHF factor.
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    /// UHF scale exponent.
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// UHF filtration depth or gasket inner depth.
    #[arg(long)]
    pub depth: Option<u32>,
    /// Gasket ambient level.
    #[arg(long, default_value_t = 2)]
    pub out_level: u32,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cutoff of D_ℕ in the crossed spectrum.
    #[arg(long)]
    pub nat_cutoff: Option<usize>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Write the spectrum as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub spectrum_csv: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LipArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest power of α⁻¹.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Integer frequency of the test mode, e.g. "1,0"; defaults to the first unit vector.
    #[arg(long, allow_hyphen_values = true)]
    pub mode: Option<String>,
    /// Matrix unit "i,j" placed at position 0 (UHF).
    #[arg(long, default_value = "0,0")]
    pub unit: String,
    /// Gasket test function.
    #[arg(long, value_enum, default_value_t = Coordinate::X)]
    pub function: Coordinate,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinate {
    X,
    Y,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest shift; defaults to the room left in the window (UHF) or 3.
    #[arg(long)]
    pub k_max: Option<u32>,
    /// Lowest window position (UHF).
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    pub lo: i64,
    /// Highest window position (UHF).
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub hi: i64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CovarianceArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of shift blocks minus one; 2 for UHF, 3 otherwise.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Sample points for the function models.
    #[arg(long, default_value_t = 24)]
    pub samples: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RewriteArgs {
    /// Rotation angle: "p/q" or a decimal.
    #[arg(long, default_value = "1/5")]
    pub theta: String,
    #[arg(long)]
    pub word: String,
    /// Random rewriting orders checked against the leftmost one.
    #[arg(long, default_value_t = 20)]
    pub strategies: usize,
    /// Matrix model cutoffs N = M for the oracle comparison.
    #[arg(long, default_value_t = 24)]
    pub cutoff: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GasketCoverArgs {
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Largest level of the diagram check.
    #[arg(long, default_value_t = 3)]
    pub n_max: u32,
    /// Address length of the sampled points.
    #[arg(long, default_value_t = 30)]
    pub address_len: usize,
    /// Write the edges of K_N up to this depth as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub edges_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub out_level: u32,
    #[arg(long, default_value_t = 3)]
    pub depth: u32,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    pub fn common(&self) -> Option<&Common> {
        match self {
            Command::Dim(a) | Command::CrossedDim(a) => Some(&a.common),
            Command::Lip(a) => Some(&a.common),
            Command::Scaling(a) => Some(&a.common),
            Command::Covariance(a) => Some(&a.common),
            Command::Rewrite(a) => Some(&a.common),
            Command::GasketCover(a) => Some(&a.common),
            Command::ReportVersion => None,
        }
    }
}
