//! `tailrisk`: tail-index plots, threshold selection, goodness-of-fit bands,
//! reinsurance premiums, value at risk and tail dependence from CSV data.
//!
//! Exit codes: 0 on success, 1 when an analysis fails, 2 on usage errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailrisk::rng::DEFAULT_SEED;

#[derive(Parser, Debug)]
#[command(name = "tailrisk", version, about = "Extreme-value tail analysis of claim-size data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Column name or zero-based index; give two for bivariate commands.
    #[arg(long = "column", short = 'c', required = true)]
    pub columns: Vec<String>,
    /// Drop rows whose COL value is below VALUE (`COL=VALUE`, repeatable).
    #[arg(long = "min-filter", value_name = "COL=VALUE")]
    pub min_filters: Vec<String>,
    /// Keep only rows whose COL cell equals VALUE (`COL=VALUE`, repeatable).
    #[arg(long = "row-filter", value_name = "COL=VALUE")]
    pub row_filters: Vec<String>,
    /// Add VALUE to COL after filtering (`COL=VALUE`, repeatable).
    #[arg(long = "shift", value_name = "COL=VALUE")]
    pub shifts: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    pub format: OutFormat,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArg {
    /// Seed for every random draw; TAILRISK_SEED overrides the default.
    #[arg(long, env = "TAILRISK_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectMethod {
    Bootstrap,
    Sequential,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorArg {
    Hill,
    Ml,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightArg {
    /// `(t(1-t))^a / sigma(t)`, normalized by the pointwise standard deviation.
    Sigma,
    /// `t^a`.
    Power,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyArg {
    Frechet,
    LogDisturbedPareto,
    ExactPareto,
    Pareto,
    Gpd,
    Exponential,
}

#[derive(Args, Debug, Clone)]
pub struct BandArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = WeightArg::Sigma)]
    pub weight: WeightArg,
    /// Exponent `a` of the weight function.
    #[arg(long = "weight-exponent", default_value_t = 0.1, allow_hyphen_values = true)]
    pub weight_exponent: f64,
    /// Ignore the weight below this plotting position.
    #[arg(long = "weight-lower", default_value_t = 0.0)]
    pub weight_lower: f64,
    /// Grid size for the limit-process simulation.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    /// Monte-Carlo replicates.
    #[arg(long, default_value_t = 100_000)]
    pub sims: usize,
    /// Use this critical value instead of simulating one.
    #[arg(long)]
    pub critical: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hill estimates over a range of k.
    HillPlot {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long = "k-min", default_value_t = 2)]
        k_min: usize,
        /// Defaults to n - 1.
        #[arg(long = "k-max")]
        k_max: Option<usize>,
        /// Emit log k / log n as the abscissa.
        #[arg(long = "log-x")]
        log_x: bool,
    },
    /// GPD maximum-likelihood shape estimates over a range of k.
    MlPlot {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long = "k-min", default_value_t = 10)]
        k_min: usize,
        #[arg(long = "k-max")]
        k_max: Option<usize>,
        #[arg(long = "log-x")]
        log_x: bool,
    },
    /// Data-driven choice of the number of order statistics k.
    SelectK {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum)]
        method: SelectMethod,
        #[arg(long = "r-factor", default_value_t = 2.5)]
        r_factor: f64,
        #[arg(long, default_value_t = 0.7)]
        xi: f64,
        #[arg(long, default_value_t = 0.8)]
        lambda: f64,
        /// Bootstrap replicates per resample size.
        #[arg(long, default_value_t = tailrisk::threshold_selection::DEFAULT_REPLICATES)]
        replicates: usize,
        /// First-stage resample sizes (repeatable); default ceil(n^e) for e in 0.95, 0.9, 0.85, 0.8.
        #[arg(long = "n1")]
        n1: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
    },
    /// Pareto quantile plot with a simultaneous confidence band.
    QqBand {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        band: BandArgs,
    },
    /// Fitted GPD quantile function with a simultaneous confidence band.
    GpdBand {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        band: BandArgs,
    },
    /// Net premium per claim of an excess-of-loss layer.
    Premium {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        retention: f64,
        /// Layer width; unlimited when omitted.
        #[arg(long)]
        cover: Option<f64>,
        /// Also report a (1 - alpha) confidence interval.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Value at risk at level alpha (exceedance probability).
    Var {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
    },
    /// Coefficient of tail dependence of two columns.
    Eta {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Hill)]
        estimator: EstimatorArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Profile of the dependence function d with pointwise intervals.
    DProfile {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Writes a synthetic sample as CSV (column `x`, or `x1,x2` with --pairs).
    Simulate {
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, value_enum, default_value_t = FamilyArg::Pareto)]
        family: FamilyArg,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long)]
        n: usize,
        /// Bivariate sample: `independent`, `comonotone` or a Gaussian-copula correlation.
        #[arg(long, allow_hyphen_values = true)]
        pairs: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
