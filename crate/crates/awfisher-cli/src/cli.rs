//! Command-line surface.

use std::path::PathBuf;

use awfisher_core::{Method, SlopeMethod};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "awfisher",
    version,
    about = "Adaptively weighted Fisher p-value combination for meta-analysis",
    long_about = "Combines per-study p-values feature by feature, picking the binary study \
                  weights that minimize the weighted Fisher significance level. Includes Monte \
                  Carlo null tables for the AW statistic, FDR control, weight categorization, \
                  and a simulation lab for weight-consistency and exact-slope experiments."
)]
pub struct Cli {
    /// Worker threads (0 = all available cores); outputs do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a feature x study p-value matrix
    Combine(CombineArgs),
    /// Build or inspect Monte Carlo null tables
    #[command(subcommand)]
    Null(NullCmd),
    /// Run simulation experiments
    #[command(subcommand)]
    Sim(SimCmd),
    /// Derive tidy plot-ready CSVs from command outputs
    #[command(subcommand)]
    Plotdata(PlotdataCmd),
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    /// Input CSV: feature_id column, one p-value column per study
    #[arg(long)]
    pub input: PathBuf,

    /// Combination method
    #[arg(long, value_enum, default_value_t = MethodArg::AwFisher)]
    pub method: MethodArg,

    /// Null-table file (required for aw-fisher; must match the study count)
    #[arg(long)]
    pub null_table: Option<PathBuf>,

    /// Benjamini-Hochberg FDR level for the significant flag
    #[arg(long, default_value_t = 0.05)]
    pub fdr: f64,

    /// Output CSV path (- for stdout)
    #[arg(long, default_value = "-")]
    pub out: PathBuf,

    /// What to do with rows holding invalid p-values
    #[arg(long, value_enum, default_value_t = OnInvalid::Error)]
    pub on_invalid: OnInvalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fisher,
    AwFisher,
    Stouffer,
    Logit,
    MinP,
    MaxP,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Fisher => Method::Fisher,
            MethodArg::AwFisher => Method::AwFisher,
            MethodArg::Stouffer => Method::Stouffer,
            MethodArg::Logit => Method::Logit,
            MethodArg::MinP => Method::MinP,
            MethodArg::MaxP => Method::MaxP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnInvalid {
    Error,
    Drop,
}

#[derive(Debug, Subcommand)]
pub enum NullCmd {
    /// Sample the null distribution of the AW statistic and save it
    Build {
        /// Number of studies K
        #[arg(short = 'k', long = "studies")]
        k: usize,
        /// Monte Carlo draws
        #[arg(long, default_value_t = 1_000_000)]
        draws: u64,
        /// RNG seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output table file
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
    /// Print a table's header and sample quantiles
    Inspect {
        /// Table file to read
        table: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimCmd {
    /// Estimate weight miss / false-inclusion rates over a sample-size grid
    /// and fit their decay laws
    Rates(RatesArgs),
    /// Estimate empirical exact slopes -(2/n) ln p
    Slopes(SlopesArgs),
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Per-study effect sizes, comma separated (e.g. 0.2,0.3,0.4,0.5)
    #[arg(long, value_delimiter = ',', required = true)]
    pub effects: Vec<f64>,

    /// Per-study sample-size shares (default: 1 for every study)
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,

    /// Sample-size grid as start:stop:step or a single even value
    #[arg(long, value_parser = parse_grid, default_value = "200:1000:100")]
    pub n: GridSpec,

    /// Replicates per grid point (1000000 reproduces the reference runs)
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,

    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV for the rate points
    #[arg(long, default_value = "rates.csv")]
    pub out_rates: PathBuf,

    /// Output CSV for the fitted decay laws
    #[arg(long, default_value = "fits.csv")]
    pub out_fits: PathBuf,
}

#[derive(Debug, Args)]
pub struct SlopesArgs {
    /// Methods to estimate, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "fisher")]
    pub methods: Vec<SlopeMethodArg>,

    /// Per-study effect sizes, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub effects: Vec<f64>,

    /// Per-study sample-size shares (default: 1 for every study)
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,

    /// Average sample size(s): start:stop:step or a single even value
    #[arg(long, value_parser = parse_grid)]
    pub n: GridSpec,

    /// Replicates per estimate
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,

    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Null-table file (required when methods include aw-fisher)
    #[arg(long)]
    pub null_table: Option<PathBuf>,

    /// Output CSV
    #[arg(long, default_value = "slopes.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SlopeMethodArg {
    SingleStudy,
    Fisher,
    AwFisher,
}

impl From<SlopeMethodArg> for SlopeMethod {
    fn from(m: SlopeMethodArg) -> SlopeMethod {
        match m {
            SlopeMethodArg::SingleStudy => SlopeMethod::SingleStudy,
            SlopeMethodArg::Fisher => SlopeMethod::Fisher,
            SlopeMethodArg::AwFisher => SlopeMethod::AwFisher,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum PlotdataCmd {
    /// Weight-category counts of significant features from a combine output
    Categories {
        /// Results CSV written by `awfisher combine`
        #[arg(long)]
        input: PathBuf,
        /// Output CSV (- for stdout)
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Rate points joined with fitted-curve values for overlay plots
    Rates {
        /// Rates CSV written by `awfisher sim rates`
        #[arg(long)]
        rates: PathBuf,
        /// Fits CSV written by `awfisher sim rates`
        #[arg(long)]
        fits: Option<PathBuf>,
        /// Output CSV (- for stdout)
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

/// Inclusive sample-size grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec(pub Vec<u64>);

/// Parses `start:stop:step` (inclusive) or a single value; every sample
/// size must be even and at least 2.
fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid: Vec<u64> = match parts.as_slice() {
        [single] => vec![single
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("`{single}` is not a sample size"))?],
        [start, stop, step] => {
            let parse = |tok: &str| -> Result<u64, String> {
                tok.trim()
                    .parse::<u64>()
                    .map_err(|_| format!("`{tok}` is not a sample size"))
            };
            let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
            if step == 0 {
                return Err("grid step must be positive".into());
            }
            if start > stop {
                return Err("grid start exceeds stop".into());
            }
            (start..=stop).step_by(step as usize).collect()
        }
        _ => return Err(format!("`{s}` is not a grid (use start:stop:step or a value)")),
    };
    for &n in &grid {
        if n < 2 || n % 2 != 0 {
            return Err(format!("sample size {n} must be even and at least 2"));
        }
    }
    Ok(GridSpec(grid))
}
