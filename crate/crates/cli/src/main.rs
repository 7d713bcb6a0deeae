//! `bazaar`: one command-line surface over the asset-market kernel:
//! catalog management, compliant geo-distributed planning, simulated
//! execution, metering/billing, escrow transfer simulation, and scripted
//! persona walkthroughs.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use config::Config;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "bazaar", version, about = "Desk-scale data-asset market kernel")]
struct Cli {
    /// Configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for all generated data and simulations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Echo the effective configuration and extra diagnostics to stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Publish to, search and match against marketplaces.
    Catalog {
        #[command(subcommand)]
        action: commands::catalog::CatalogAction,
    },
    /// Parse an extended-SQL file and print the optimal compliant plan.
    Plan {
        /// Program: REGISTER/CONSTRAINT statements plus SELECTs.
        #[arg(long)]
        sql: PathBuf,
        /// Append per-node (rows, bytes) estimates.
        #[arg(long)]
        explain: bool,
    },
    /// Plan, place and execute a query over generated data.
    Run(commands::run::RunArgs),
    /// Aggregate a usage log into an invoice.
    Bill(commands::bill::BillArgs),
    /// Escrow transfer protocol tools.
    Escrow {
        #[command(subcommand)]
        action: commands::escrow::EscrowAction,
    },
    /// Scripted end-to-end walkthroughs.
    Demo {
        #[command(subcommand)]
        persona: commands::demo::Persona,
    },
}

/// Command failure: domain errors exit 1, usage errors exit 2.
#[derive(Debug)]
pub enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    fn domain(msg: impl Into<String>) -> Self {
        Failure::Domain(msg.into())
    }

    fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }
}

/// What a command produced: the data stream, plus an optional domain failure
/// that still wants the data printed (e.g. `compliant=NC-impossible`).
pub struct Outcome {
    pub output: String,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(output: impl Into<String>) -> Result<Outcome, Failure> {
        Ok(Outcome { output: output.into(), failure: None })
    }
}

pub struct Ctx {
    pub config: Config,
    pub seed: u64,
    pub verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match Config::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    if cli.verbose {
        eprintln!("effective configuration:\n{}", config.render());
    }
    let ctx = Ctx { config, seed: cli.seed, verbose: cli.verbose };

    let result = match cli.command {
        Command::Catalog { action } => commands::catalog::run(&ctx, action),
        Command::Plan { sql, explain } => commands::plan::run(&ctx, &sql, explain),
        Command::Run(args) => commands::run::run(&ctx, args),
        Command::Bill(args) => commands::bill::run(&ctx, args),
        Command::Escrow { action } => commands::escrow::run(&ctx, action),
        Command::Demo { persona } => commands::demo::run(&ctx, persona),
    };

    match result {
        Ok(Outcome { output, failure }) => {
            print!("{output}");
            match failure {
                None => ExitCode::SUCCESS,
                Some(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(1)
                }
            }
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
