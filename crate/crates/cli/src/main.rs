mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdeflow_core::agents::Mode;
use thiserror::Error;

use config::ProviderKind;

/// Exit codes: 0 success, 1 session or case failure, 2 usage error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

#[derive(Parser)]
#[command(name = "pdeflow", version, about = "Solve PDE problems through a checked tool chain and score the process")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; all written paths are relative to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Node2Vec seed for the embedding metric.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable output on standard out.
    #[arg(long, global = true)]
    json: bool,
    /// Keep provider request/response traces in the session (`run`) or output (`bench`) directory.
    #[arg(long, global = true)]
    trace: bool,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session.
    Run(RunArgs),
    /// Score an execution graph against a pattern graph.
    Eval {
        exec: PathBuf,
        pattern: PathBuf,
    },
    /// Run every case of a pack and write report.json and report.md.
    Bench(BenchArgs),
    /// Render tables from one or more bench result directories.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
    /// List the registered tools and their parameter schemas.
    Tools,
}

#[derive(Args)]
pub struct RunArgs {
    /// Bundled or pack case id; supplies the query and the script.
    #[arg(long, conflicts_with_all = ["query", "query_file"])]
    case: Option<String>,
    /// Problem text.
    #[arg(long)]
    query: Option<String>,
    /// File holding the problem text.
    #[arg(long, conflicts_with = "query")]
    query_file: Option<PathBuf>,
    /// Pack directory searched for `--case` (default: the bundled packs).
    #[arg(long)]
    pack: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    /// Provider script for queries without a case.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
}

#[derive(Args)]
pub struct BenchArgs {
    pack: PathBuf,
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Cases run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|_| format!("unknown mode `{s}` (progact, stepwise or static)"))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_env("PDEFLOW_LOG").unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).with_target(false).try_init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.common.verbose);
    let outcome = match cli.command {
        Command::Run(args) => commands::run(&cli.common, args),
        Command::Eval { exec, pattern } => commands::eval(&cli.common, &exec, &pattern),
        Command::Bench(args) => commands::bench(&cli.common, args),
        Command::Report { dirs } => commands::report(&cli.common, &dirs),
        Command::Tools => commands::tools(&cli.common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(m)) => {
            eprintln!("pdeflow: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("pdeflow: {m}");
            ExitCode::from(2)
        }
    }
}
