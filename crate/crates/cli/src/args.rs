use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use safs::{Direction, RankMethod, ScanConfig, DEFAULT_MISSING_LABEL};

/// Sparsity-based feature ranking and divergent subgroup scanning.
#[derive(Debug, Parser)]
#[command(name = "safs", version, about)]
pub struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, env = "SAFS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank features against the outcome.
    Rank(RankArgs),
    /// Scan the top-ranked (or all) features for the most divergent subgroup.
    Scan(ScanArgs),
    /// Rank, select, scan, run the permutation test and report.
    Pipeline(PipelineArgs),
    /// Rank-biased overlap between saved rankings.
    Compare(CompareArgs),
    /// Scan every top-K prefix and emit one JSON line per K.
    Sweep(SweepArgs),
    /// Write a seeded synthetic dataset as CSV.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Safs,
    Mi,
}

impl From<MethodArg> for RankMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Safs => RankMethod::Safs,
            MethodArg::Mi => RankMethod::MutualInformation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Over,
    Under,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Over => Direction::Over,
            DirectionArg::Under => Direction::Under,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, env = "SAFS_INPUT")]
    pub input: PathBuf,
    /// Name of the binary outcome column.
    #[arg(long, env = "SAFS_OUTCOME_COL", default_value = "y")]
    pub outcome_col: String,
    /// Quantile bins for numeric columns.
    #[arg(long, env = "SAFS_BINS", default_value_t = 5)]
    pub bins: usize,
    /// Category assigned to empty cells.
    #[arg(long, env = "SAFS_MISSING_CATEGORY", default_value = DEFAULT_MISSING_LABEL)]
    pub missing_category: String,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "SAFS_FORMAT", value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Ascent runs; the first starts from the whole dataset.
    #[arg(long, env = "SAFS_RESTARTS", default_value_t = 10)]
    pub restarts: usize,
    #[arg(long, env = "SAFS_DIRECTION", value_enum, default_value_t = DirectionArg::Over)]
    pub direction: DirectionArg,
    #[arg(long, env = "SAFS_SEED", default_value_t = 0)]
    pub seed: u64,
}

impl SearchArgs {
    pub fn config(&self) -> ScanConfig {
        ScanConfig {
            direction: self.direction.into(),
            restarts: self.restarts,
            seed: self.seed,
            ..ScanConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "SAFS_METHOD", value_enum, default_value_t = MethodArg::Safs)]
    pub method: MethodArg,
    /// Also record the top-K selection in the artifact.
    #[arg(long, env = "SAFS_TOP_K")]
    pub top_k: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "SAFS_METHOD", value_enum, default_value_t = MethodArg::Safs)]
    pub method: MethodArg,
    /// Scan only the K top-ranked features (default: all features).
    #[arg(long, env = "SAFS_TOP_K")]
    pub top_k: Option<usize>,
    /// Take the feature order from a saved ranking instead of ranking again.
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "SAFS_METHOD", value_enum, default_value_t = MethodArg::Safs)]
    pub method: MethodArg,
    #[arg(long, env = "SAFS_TOP_K")]
    pub top_k: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Label permutations for the empirical p-value (0 skips the test).
    #[arg(long, env = "SAFS_PERMUTATIONS", default_value_t = safs::report::DEFAULT_PERMUTATIONS)]
    pub permutations: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Ranking files written by `safs rank`.
    #[arg(long, num_args = 2.., required = true)]
    pub rankings: Vec<PathBuf>,
    #[arg(long, default_value_t = safs::eval::DEFAULT_PERSISTENCE)]
    pub persistence: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, env = "SAFS_METHOD", value_enum, default_value_t = MethodArg::Safs)]
    pub method: MethodArg,
    /// Ascending comma-separated K values.
    #[arg(long = "k", value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, env = "SAFS_PERMUTATIONS", default_value_t = 0)]
    pub permutations: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    /// Rare co-occurring values with an elevated outcome rate.
    Planted,
    /// Features independent of the outcome.
    Noise,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: Fixture,
    #[arg(long, default_value_t = 5000)]
    pub rows: usize,
    #[arg(long, default_value_t = 12)]
    pub features: usize,
    /// Planted features (planted fixture only).
    #[arg(long, default_value_t = 3)]
    pub planted: usize,
    /// Values per feature.
    #[arg(long, default_value_t = 4)]
    pub cardinality: usize,
    /// Outcome rate (noise fixture only).
    #[arg(long, default_value_t = 0.3)]
    pub rate: f64,
    #[arg(long, env = "SAFS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the planted subgroup as JSON to this file.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}
