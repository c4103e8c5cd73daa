//! Command-line front end wiring ingestion, normalization, evaluation, and
//! protocol generation over score CSV tables.
//!
//! Exit codes: 0 success, 1 validation/configuration error, 2 data error,
//! 3 numeric failure (non-convergence in strict mode).

mod commands;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairscore_core::DemographicAxis;

#[derive(Parser)]
#[command(
    name = "fairscore",
    version,
    about = "Cohort-based score normalization and demographic fairness evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the requested methods on cohort tables and write normalized
    /// score tables plus serialized models.
    Normalize(NormalizeArgs),
    /// Evaluate score tables: threshold at the FMR target, per-demographic
    /// rates, fairness metrics, and comparison tables.
    Evaluate(EvaluateArgs),
    /// Protocol constructions over score tables and subject manifests.
    Protocol {
        #[command(subcommand)]
        command: ProtocolCommand,
    },
    /// Generate a synthetic biased score ecosystem (four tables).
    Synth(SynthArgs),
}

#[derive(Args)]
struct NormalizeArgs {
    /// Test score table (kind `test`).
    #[arg(long)]
    test: PathBuf,
    /// Gallery x cohort score table, required by M1, M1.1, M1.2.
    #[arg(long)]
    gallery_cohort: Option<PathBuf>,
    /// Probe x cohort score table, required by M2, M2.1, M2.2.
    #[arg(long)]
    probe_cohort: Option<PathBuf>,
    /// Cohort x cohort score table, required by M3, M4, M5.
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Comma-separated method tokens, e.g. `m1,m1.1,m3`.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value = "ethnicity")]
    axis: String,
    /// Minimum scores per normalization group.
    #[arg(long, default_value_t = 10)]
    min_cohort_count: usize,
    /// L2 penalty of the logistic fit.
    #[arg(long, default_value_t = 1e-4)]
    lambda: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    #[arg(long)]
    out: PathBuf,
    /// Fail on the first problematic record or non-converged fit (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Drop problematic records and continue, recording them in reports.
    #[arg(long)]
    lenient: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Score tables to evaluate (kind `test`); the file stem becomes the
    /// method tag, with a `normalized_` prefix stripped.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "ethnicity")]
    axis: String,
    /// Combined-set FMR the decision threshold is chosen at.
    #[arg(long, default_value_t = 1e-3)]
    fmr_target: f64,
    /// FMR-factor weight in the fairness metric.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Stabilizer added to the rate product.
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
    /// Per-input report format: one JSON per input, or one flat CSV.
    #[arg(long, value_parser = ["json", "csv"], default_value = "json")]
    format: String,
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Keep going when an input fails; failures land in failures.json.
    #[arg(long)]
    lenient: bool,
}

#[derive(Subcommand)]
enum ProtocolCommand {
    /// Reduce impostor records per demographic while preserving the pooled
    /// score distribution.
    Subsample(SubsampleArgs),
    /// Draw uniform random genuine and impostor pairs from a manifest.
    RandomPairs(RandomPairsArgs),
    /// Generate k replicate pair lists from derived sub-seeds.
    Splits(SplitsArgs),
}

#[derive(Args)]
struct SubsampleArgs {
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "ethnicity")]
    axis: String,
    /// Impostor records to keep per demographic.
    #[arg(long)]
    count: usize,
    /// Equal-mass bins of the pooled impostor distribution.
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandomPairsArgs {
    /// Subject manifest JSON.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    genuine: usize,
    #[arg(long)]
    impostor: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    genuine: usize,
    #[arg(long)]
    impostor: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator spec JSON; defaults to a built-in two-group biased spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

/// Command failure with its exit-code class.
#[derive(Debug)]
pub enum CliError {
    /// Validation or configuration problem (exit 1).
    Config(String),
    /// Library failure: exit 2 for data errors, 3 for numeric failures,
    /// 1 for spec validation.
    Core(fairscore_core::Error),
    /// Filesystem failure (exit 1).
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Core(err) => match err {
                fairscore_core::Error::InvalidSpec(_) => 1,
                fairscore_core::Error::NonConvergence { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "{message}"),
            CliError::Core(err) => write!(f, "{err}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<fairscore_core::Error> for CliError {
    fn from(err: fairscore_core::Error) -> Self {
        CliError::Core(err)
    }
}

fn parse_axis(token: &str) -> Result<DemographicAxis, CliError> {
    token
        .parse()
        .map_err(|err: fairscore_core::Error| CliError::Config(err.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Normalize(args) => commands::normalize::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Protocol { command } => match command {
            ProtocolCommand::Subsample(args) => commands::protocol::subsample(args),
            ProtocolCommand::RandomPairs(args) => commands::protocol::random_pairs(args),
            ProtocolCommand::Splits(args) => commands::protocol::splits(args),
        },
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
