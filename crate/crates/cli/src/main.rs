//! `dwt`: command-line front end for the Delaunay-weighted two-sample test.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric or
//! degeneracy error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dwtest::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "dwt", version, about = "Delaunay-weighted two-sample testing on manifold data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a two-sample test on a labeled CSV file.
    Test(TestArgs),
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Repeat a scenario and tabulate p-values and rejection rates.
    Benchmark(BenchmarkArgs),
    /// Export the manifold embedding of a labeled CSV file.
    Embed(EmbedArgs),
    /// Export the sparse Delaunay weight matrix as `i,j,gamma` rows.
    InspectWeights(WeightsArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Labeled CSV file (header row, `#` comments allowed).
    #[arg(long)]
    input: PathBuf,
    /// Label column name, or a zero-based index.
    #[arg(long, default_value = "label")]
    label: String,
    /// Label value treated as group 1 (default: the lexicographically smaller).
    #[arg(long)]
    positive: Option<String>,
}

#[derive(Debug, Args)]
struct EmbedOpts {
    /// Intrinsic dimension (estimated with two-NN when omitted).
    #[arg(long)]
    d: Option<usize>,
    /// Neighbors in the geodesic graph (default max(d + 1, ceil(log2 n))).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "dw")]
    method: commands::MethodArg,
    #[command(flatten)]
    embed: EmbedOpts,
    /// Stereographic scaling parameter.
    #[arg(long, default_value_t = dwtest::delaunay::DEFAULT_ETA)]
    eta: f64,
    /// Number of label permutations.
    #[arg(long = "B", default_value_t = dwtest::permutation::DEFAULT_PERMUTATIONS)]
    permutations: usize,
    /// Significance levels for the reported decisions.
    #[arg(long, value_delimiter = ',', default_values_t = dwtest::benchmark::DEFAULT_ALPHAS)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturb the embedded cloud by a relative 1e-9 to break degeneracies.
    #[arg(long)]
    jitter: bool,
    #[arg(long)]
    threads: Option<usize>,
    /// Report file (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: String,
    /// Ambient dimension of the Gaussian scenarios.
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 50)]
    n1: usize,
    #[arg(long, default_value_t = 50)]
    n0: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Digit image (PGM or CSV grid) for the image scenarios.
    #[arg(long)]
    template: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    #[arg(long)]
    scenario: String,
    /// Ambient dimension of the Gaussian scenarios.
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 50)]
    n1: usize,
    #[arg(long, default_value_t = 50)]
    n0: usize,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Methods to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = commands::MethodArg::all())]
    method: Vec<commands::MethodArg>,
    /// Neighbor count override (geodesic graph for dw, neighbors for knn).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = dwtest::delaunay::DEFAULT_ETA)]
    eta: f64,
    #[arg(long = "B", default_value_t = dwtest::permutation::DEFAULT_PERMUTATIONS)]
    permutations: usize,
    #[arg(long, value_delimiter = ',', default_values_t = dwtest::benchmark::DEFAULT_ALPHAS)]
    alpha: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate the intrinsic dimension on every replicate instead of using
    /// the scenario's true dimension.
    #[arg(long)]
    estimate_d: bool,
    #[arg(long)]
    jitter: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    template: Option<PathBuf>,
    /// Output directory for the ECDF and rejection CSV files.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    embed: EmbedOpts,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    /// Labeled CSV file, or an embedding exported by `embed` (used as is).
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    embed: EmbedOpts,
    #[arg(long, default_value_t = dwtest::delaunay::DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jitter: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            match e.class() {
                ErrorClass::Data => ExitCode::from(2),
                ErrorClass::Numeric => ExitCode::from(3),
            }
        }
    }
}
