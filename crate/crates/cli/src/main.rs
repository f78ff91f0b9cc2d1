mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Overrides, RunConfig};
use error::CliError;

/// Multi-norm harmonic analysis toolkit.
#[derive(Parser)]
#[command(name = "multinorm", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bump,
    Corpus,
}

#[derive(Subcommand)]
enum Command {
    /// Check the matrix and print the cone census.
    Validate,
    /// Write the admissible scales up to --bound as CSV and check the tube cover.
    Scales,
    /// Write the n=2 scale panel or the n=3 cone triangle as SVG.
    Plot,
    /// L¹ norms of four square functions over the seeded corpus, with ratio spreads.
    Equivalence,
    /// Atomic decomposition of a sampled function.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Skip atom validation.
        #[arg(long)]
        no_validate: bool,
    },
    /// Covering computations on stored or random open sets.
    Journe {
        /// Instance file; random instances are generated when absent.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        factors: usize,
        #[arg(long, default_value_t = 5)]
        depth: u32,
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Random instances use 1..=pieces rectangles.
        #[arg(long, default_value_t = 6)]
        pieces: usize,
        #[arg(long, default_value_t = 4)]
        max_degree: u32,
        #[arg(long, default_value_t = 32.0)]
        constant: f64,
    },
    /// Distance diagnostics of the lattice at several bounds.
    Kappa {
        /// Comma-separated bounds; defaults to --bound and twice --bound.
        #[arg(long, value_delimiter = ',')]
        bounds: Vec<i64>,
    },
    /// Check a multiplier expression against the symbol estimates.
    Symbol {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 3)]
        order: u32,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Write a test function or the seeded corpus in the binary sample format.
    Sample {
        #[arg(long, value_enum, default_value_t = Kind::Bump)]
        kind: Kind,
        #[arg(long, default_value_t = 0.15)]
        width: f64,
        /// Output file (bump) or directory (corpus).
        #[arg(long)]
        to: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Validate => commands::validate(&cfg),
        Command::Scales => commands::scales(&cfg),
        Command::Plot => commands::plot(&cfg),
        Command::Equivalence => commands::equivalence(&cfg),
        Command::Decompose { input, no_validate } => commands::decompose(&cfg, &input, !no_validate),
        Command::Journe { instance, factors, depth, count, pieces, max_degree, constant } => commands::journe_cmd(
            &cfg,
            &commands::JourneArgs { instance, s: factors, depth, count, pieces, max_degree, constant },
        ),
        Command::Kappa { bounds } => {
            let bounds = if bounds.is_empty() { vec![cfg.bound, 2 * cfg.bound] } else { bounds };
            commands::kappa(&cfg, &bounds)
        }
        Command::Symbol { expr, order, samples } => commands::symbol(&cfg, &expr, order, samples),
        Command::Sample { kind, width, to } => {
            let kind = match kind {
                Kind::Bump => commands::SampleKind::Bump { width },
                Kind::Corpus => commands::SampleKind::Corpus,
            };
            commands::sample(&cfg, kind, to.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
