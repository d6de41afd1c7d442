mod commands;
mod mechanism_args;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mechanism_args::MechanismArgs;

/// Piecewise mixture noise mechanisms: analytics, sweeps, releases, benchmarks and audits.
#[derive(Parser, Debug)]
#[command(name = "pwmix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Charging {
    Parallel,
    Sequential,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean absolute noise, variance, entropy and privacy budgets of a mechanism.
    Stats {
        #[command(flatten)]
        mechanism: MechanismArgs,
        /// Report the noise as released on integer counts (continuous laws rounded).
        #[arg(long)]
        integer: bool,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Mixture-versus-standard comparison table as CSV.
    Sweep {
        /// Use the built-in 69-point reference grid.
        #[arg(long, conflicts_with = "grid")]
        table1: bool,
        /// JSON file holding a list of [c_t, eps, r_eps] triples.
        #[arg(long, required_unless_present = "table1")]
        grid: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noisy count or histogram release from a CSV dataset.
    Release {
        #[arg(long)]
        data: PathBuf,
        /// Conjunctive predicate "attr=value[,attr=value...]" for a count query.
        #[arg(long, conflicts_with = "hist", required_unless_present = "hist")]
        query: Option<String>,
        /// Attribute to histogram (combined with --query predicates when both are given).
        #[arg(long)]
        hist: Option<String>,
        /// Extra predicates restricting a histogram.
        #[arg(long = "where", requires = "hist")]
        filter: Option<String>,
        #[command(flatten)]
        mechanism: MechanismArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON ledger file to append the budget charge to.
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Refuse the release if the ledger total would exceed this.
        #[arg(long, requires = "ledger")]
        budget_cap: Option<f64>,
        /// Allow mechanisms without a differential privacy guarantee.
        #[arg(long = "unsafe")]
        allow_unsafe: bool,
        /// Include true answers in the output.
        #[arg(long)]
        reveal_true: bool,
        /// The first CSV row is data, not a header.
        #[arg(long)]
        no_header: bool,
        #[arg(long, value_enum, default_value = "parallel")]
        charging: Charging,
    },
    /// Monte Carlo utility benchmark of clamped count releases.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override samples per (mechanism, count) cell.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Empirical privacy-loss audit over neighboring datasets.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failure with its exit status: 2 for usage or configuration errors, 3 for policy refusals.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn refused(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<pwmix::Error> for Failure {
    fn from(e: pwmix::Error) -> Self {
        match e {
            pwmix::Error::Refused(_) => Self::refused(e.to_string()),
            other => Self::usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats {
            mechanism,
            integer,
            format,
        } => commands::stats(&mechanism, integer, format),
        Command::Sweep { table1: _, grid, out } => commands::sweep(grid.as_deref(), out.as_deref()),
        Command::Release {
            data,
            query,
            hist,
            filter,
            mechanism,
            seed,
            ledger,
            budget_cap,
            allow_unsafe,
            reveal_true,
            no_header,
            charging,
        } => commands::release(commands::ReleaseArgs {
            data,
            query,
            hist,
            filter,
            mechanism,
            seed,
            ledger,
            budget_cap,
            allow_unsafe,
            reveal_true,
            no_header,
            charging,
        }),
        Command::Bench {
            config,
            out,
            seed,
            samples,
        } => commands::bench(&config, &out, seed, samples),
        Command::Audit { config, out, seed } => commands::audit(&config, &out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("pwmix: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
