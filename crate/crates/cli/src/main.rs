//! `natop`: classify natural multilinear operators between tensor bundles
//! and verify their defining identities in exact arithmetic.
//!
//! Exit codes: 0 success, 2 bad expression or query, 3 resource cap
//! exceeded, 4 a verification identity failed. Reports with the same flags
//! and seed are byte-identical.

mod caps;
mod commands;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use caps::CapFlags;
use commands::Report;
use natop_core::BundleSpec;
use parse::parse_bundle;

#[derive(Debug)]
pub enum Failure {
    /// Malformed expression, query, or config: exit 2.
    Usage(String),
    /// A resource cap stopped the computation: exit 3.
    Cap(String),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser)]
#[command(name = "natop", version, about = "Exact workbench for natural operators on tensor bundles")]
struct Cli {
    /// Report style; json is the machine contract
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Cap on unknown coefficients during classification
    #[arg(long, global = true)]
    max_unknowns: Option<usize>,

    /// Cap on generated equation entries during classification
    #[arg(long, global = true)]
    max_nonzeros: Option<usize>,

    /// key = value file that may set the resource caps
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Basis of k-linear natural operators of a given order
    Classify {
        /// Source bundle expression, once per argument slot
        #[arg(long, required = true)]
        src: Vec<String>,
        /// Target bundle expression
        #[arg(long)]
        tgt: String,
        /// Operator order (derivatives per slot)
        #[arg(long)]
        r: usize,
        /// Base dimension
        #[arg(long)]
        m: usize,
    },
    /// Dimension and basis of absolutely invariant sections
    Invariants {
        /// Bundle expression
        #[arg(long)]
        bundle: String,
        /// Base dimension
        #[arg(long)]
        m: usize,
    },
    /// Casimir number of a highest weight (padded with zeros to length m)
    Casimir {
        /// Base dimension
        #[arg(long)]
        m: usize,
        /// Weight entries, one flag per entry or comma separated
        #[arg(long, required = true, value_delimiter = ',')]
        weight: Vec<i64>,
    },
    /// Order bound from Casimir matching between two weights
    Bound {
        /// Source weight, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        rho: Vec<i64>,
        /// Target weight, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        mu: Vec<i64>,
    },
    /// Check that every bracket commutes with Lie derivatives on random probes
    VerifyBrackets {
        /// Base dimension
        #[arg(long)]
        m: usize,
        /// Random probes per identity
        #[arg(long, default_value_t = 30)]
        probes: usize,
        /// Deterministic probe seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Polynomial degree of the random probes
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
    /// Check integral functionals against seeded compactly supported probes
    VerifyFunctionals {
        /// Seeded spline probes per functional
        #[arg(long, default_value_t = 3)]
        trials: usize,
        /// Deterministic probe seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Locality verdicts for a sample slot partition
    DemoLocality,
}

fn parse_bundle_arg(what: &str, expr: &str) -> Result<BundleSpec, Failure> {
    parse_bundle(expr).map_err(|e| Failure::Usage(format!("in {what} {expr:?}: {e}")))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let cap_flags = CapFlags {
        max_unknowns: cli.max_unknowns,
        max_nonzeros: cli.max_nonzeros,
    };
    match &cli.command {
        Command::Classify { src, tgt, r, m } => {
            let limits = caps::resolve(cap_flags, cli.config.as_deref()).map_err(Failure::Usage)?;
            let sources: Vec<BundleSpec> = src
                .iter()
                .map(|e| parse_bundle_arg("--src", e))
                .collect::<Result<_, _>>()?;
            let target = parse_bundle_arg("--tgt", tgt)?;
            commands::run_classify(&sources, &target, *r, *m, &limits)
        }
        Command::Invariants { bundle, m } => {
            let bundle = parse_bundle_arg("--bundle", bundle)?;
            commands::run_invariants(&bundle, *m)
        }
        Command::Casimir { m, weight } => commands::run_casimir(*m, weight),
        Command::Bound { rho, mu } => commands::run_bound(rho, mu),
        Command::VerifyBrackets { m, probes, seed, degree } => {
            commands::run_verify_brackets(*m, *probes, *seed, *degree)
        }
        Command::VerifyFunctionals { trials, seed } => {
            commands::run_verify_functionals(*trials, *seed)
        }
        Command::DemoLocality => commands::run_demo_locality(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            match cli.format {
                Format::Json => println!("{}", report.json),
                Format::Text => print!("{}", report.text),
            }
            if report.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Cap(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
