// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

mod commands;
mod output;

pub const CACHE_ENV: &str = "IWASTAT_CACHE";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "iwastat",
    version,
    about = "Class groups, p-ranks and Iwasawa λ-invariants of imaginary quadratic fields"
)]
pub struct Cli {
    /// Omit the header line with version, timestamp and resolved configuration.
    #[arg(long, global = true)]
    pub no_header: bool,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for reusable sweep checkpoints (default: $IWASTAT_CACHE).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Cohen–Lenstra densities and the λ lower bound for one prime.
    Densities(DensitiesArgs),
    /// Class group of one discriminant.
    Classgroup(ClassgroupArgs),
    /// λ-invariant of one field at one prime.
    Lambda(LambdaArgs),
    /// Sweep all fundamental discriminants up to a bound.
    Sweep(SweepArgs),
    /// Corank distribution of random matrices over F_p.
    MatrixSim(MatrixArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// List discriminants in a family, smallest first.
    Hunt(HuntArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct DensitiesArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub n: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassgroupArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: i64,
    /// Primes whose ranks are reported.
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    pub primes: Vec<u64>,
    /// List the reduced forms.
    #[arg(long)]
    pub forms: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct LambdaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub delta: i64,
    #[arg(long)]
    pub p: u64,
    #[arg(long, default_value_t = iwastat::iwasawa::DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub x: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub primes: Vec<u64>,
    #[arg(long, default_value_t = iwastat::sweep::DEFAULT_LAMBDA_CEILING)]
    pub lambda_ceiling: u64,
    #[arg(long, default_value_t = iwastat::iwasawa::DEFAULT_MAX_LEVEL)]
    pub max_level: u32,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for records.csv and report.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write distributions.svg.
    #[arg(long)]
    pub svg: bool,
    /// No per-block log on standard error.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MatrixArgs {
    #[arg(long)]
    pub p: u64,
    #[arg(long)]
    pub size: u32,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Enumerate every matrix instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    /// Also write the histogram CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 10_000)]
    pub class_number_bound: u64,
    #[arg(long, default_value_t = 2000)]
    pub lambda_bound: u64,
    #[arg(long, value_delimiter = ',', default_value = "3,5")]
    pub primes: Vec<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct HuntArgs {
    #[arg(long)]
    pub x: u64,
    /// `rank:P:N` (r_P >= N), `contains:M:N` ((Z/M)^N inside Cl) or
    /// `lambda:P,Q,...:N` (λ_p >= N for each listed p).
    #[arg(long)]
    pub family: String,
    #[arg(long, default_value_t = iwastat::sweep::DEFAULT_LAMBDA_CEILING)]
    pub lambda_ceiling: u64,
    /// Print at most this many members.
    #[arg(long, default_value_t = 20)]
    pub limit: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub quiet: bool,
}

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Invariant(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Invariant(m) | CliError::Io(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let cache_dir = cli
        .cache_dir
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let header = (!cli.no_header).then(|| {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "config": { "cli": &cli, "cache_dir": &cache_dir },
        })
    });
    match commands::run(&cli.command, cache_dir.as_deref()) {
        Ok((out, violation)) => {
            print!("{}", out.render(cli.json, header.as_ref()));
            match violation {
                Some(msg) => {
                    eprintln!("iwastat: invariant violated: {msg}");
                    ExitCode::from(2)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("iwastat: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
