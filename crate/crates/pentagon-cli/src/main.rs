mod commands;
mod config;
mod parse;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Eval(#[from] pentagon::Error),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Evaluation(String),
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pentagon", version, about = "Numerical checks of pentagon-type identities")]
struct Cli {
    /// TOML config file
    #[arg(long, global = true, env = "PENTAGON_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a single special function
    Eval(EvalArgs),
    /// Check one identity at one sampled point
    Verify(RunArgs),
    /// Check one identity over a range of seeds
    Sweep(RunArgs),
    /// Rank the registered forms of an identity
    ScanVariants(RunArgs),
    /// Summarize run records
    Report {
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    identity: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// `a..b`, `a..=b`, `n` or `a,b,c`
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Form name, or `raw`, `canonical`, `bform`
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> config::Settings {
        config::Settings {
            identity: self.identity.clone(),
            seed: self.seed,
            seeds: self.seeds.clone(),
            tol: self.tol,
            form: self.form.clone(),
            jobs: self.jobs,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalFn {
    Sb,
    Pochhammer,
    BfunS3b,
    BfunS2s1,
    BfunRp2,
    BfunFlavored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Integral,
    Product,
    Auto,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    function: EvalFn,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    n: Option<i64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    tol: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::Config::load(cli.config.as_deref()).and_then(|cfg| match &cli.command {
        Command::Eval(a) => commands::eval(&cfg, a),
        Command::Verify(a) => commands::verify(&cfg, a),
        Command::Sweep(a) => commands::sweep(&cfg, a),
        Command::ScanVariants(a) => commands::scan_variants(&cfg, a),
        Command::Report { files } => commands::report(files),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
