mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qobf_core::sim::SimConfig;

/// Randomized basis-conjugation obfuscation for gate-level quantum circuits.
///
/// Exit codes: 0 success, 1 I/O error, 2 usage error, 3 parse error,
/// 4 unknown QASM version, 5 validation error, 6 simulator cap exceeded,
/// 7 accuracy below the requested floor.
#[derive(Debug, Parser)]
#[command(name = "qobf", version, about, long_about)]
struct Cli {
    /// Simulator qubit cap; overrides QOBF_MAX_QUBITS.
    #[arg(long, global = true, value_name = "N")]
    max_qubits: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rewrite a circuit into its obfuscated form and write the key.
    Obfuscate(ObfuscateArgs),
    /// Sample a circuit and print or save the histogram.
    Simulate(SimulateArgs),
    /// Compare an original circuit with an obfuscated one.
    Compare(CompareArgs),
    /// Report structural overhead and pattern entropy.
    Analyze(AnalyzeArgs),
    /// Run the benchmark suite, the QAOA case study, or emit a benchmark.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Global,
    Chained,
    Subset,
}

#[derive(Debug, Args)]
pub struct ObfuscateArgs {
    /// Input circuit (.qasm or .json; sniffed otherwise).
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Obfuscated circuit JSON.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Key JSON; defaults to `<out stem>.key.json` next to the output.
    #[arg(long, value_name = "FILE")]
    pub key_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Global)]
    pub mode: ModeArg,
    /// Number of protected gates; subset mode only, defaults to half the gates.
    #[arg(long, value_name = "X")]
    pub subset_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Save counts; `.csv` gives `bitstring,count` rows, anything else JSON.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Print the exact outcome distribution instead of sampling.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Original circuit.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Obfuscated circuit.
    #[arg(long, value_name = "FILE")]
    pub obfuscated: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Minimum mean semantic accuracy in percent; below it the exit code is 7.
    #[arg(long, default_value_t = 90.0)]
    pub floor: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Key of an obfuscated input.
    #[arg(long, value_name = "FILE")]
    pub key: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Standard,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::Standard)]
    pub suite: SuiteArg,
    /// Run the fixed-key QAOA walkthrough instead of the suite.
    #[arg(long, conflicts_with = "emit")]
    pub case_study: bool,
    /// Write one benchmark as OpenQASM 2.0, e.g. `bell`, `ghz:5`, `bv:1011`, `qaoa`.
    #[arg(long, value_name = "NAME")]
    pub emit: Option<String>,
    /// Comma-separated modes: `global`, `chained`, `subset`, `subset:<x>`.
    #[arg(long, value_delimiter = ',', default_value = "global")]
    pub mode: Vec<String>,
    #[arg(long, default_value_t = 1024)]
    pub shots: u64,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows evaluated concurrently; 1 keeps timings free of contention.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output file (`--emit`) or artifact directory (suite, case study).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

fn sim_config(cli: &Cli) -> SimConfig {
    let mut cfg = SimConfig::from_env();
    if let Some(cap) = cli.max_qubits {
        cfg.max_qubits = cap;
    }
    cfg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = sim_config(&cli);
    let result = match &cli.command {
        Command::Obfuscate(a) => commands::obfuscate(a),
        Command::Simulate(a) => commands::simulate(a, cfg),
        Command::Compare(a) => commands::compare(a, cfg),
        Command::Analyze(a) => commands::analyze(a),
        Command::Bench(a) => commands::bench(a, cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
