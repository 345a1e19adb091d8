//! `flowcop`: pipeline driver for order-flow copula analysis.
//!
//! Exit codes: 0 success, 1 validation error, 2 data error (missing or
//! malformed input), 3 numerical failure.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowcop_core::empirical::Conditioning;

use commands::ScanTarget;
use config::PipelineConfig;

#[derive(Parser)]
#[command(
    name = "flowcop",
    about = "Copula analysis of traded-volume imbalances between stocks",
    version
)]
struct Cli {
    /// Path to the pipeline config (TOML).
    #[arg(long, global = true, default_value = "flowcop.toml")]
    config: PathBuf,
    /// Override the run seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify trade signs and aggregate tick files into interval tables.
    Ingest,
    /// Estimate the pair-averaged empirical copula and corner asymmetries.
    Copula {
        /// Conditioning mode: which noise-intensity extremes to exclude.
        #[arg(long, default_value = "unconditional")]
        mode: String,
        /// Override the per-stock exclusion count m.
        #[arg(long)]
        exclusion_m: Option<usize>,
        /// Also recompute under a seeded random flip of pair order.
        #[arg(long)]
        shuffle: bool,
    },
    /// Fit the shape parameter N of the K copula at the measured mean
    /// correlation; emit model grids and error surfaces.
    Fit,
    /// Parameter sweeps and diagnostic tables.
    Scan {
        #[arg(long, value_enum)]
        target: ScanTarget,
    },
    /// Generate synthetic inputs per the config's [synth] section.
    Synth,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if let Some(core) = err.downcast_ref::<flowcop_core::Error>() {
        use flowcop_core::Error as E;
        return match core {
            E::MissingFile(_) | E::Parse { .. } | E::Io(_) => 2,
            E::QuadratureNotConverged { .. }
            | E::BracketNotFound(_)
            | E::OutOfRange(_)
            | E::DegenerateSeries(_) => 3,
            _ => 1,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    1
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    match cli.command {
        Command::Ingest => commands::cmd_ingest(&cfg),
        Command::Copula {
            mode,
            exclusion_m,
            shuffle,
        } => {
            let mode: Conditioning = mode.parse()?;
            if let Some(m) = exclusion_m {
                cfg.exclusion_m = m;
            }
            commands::cmd_copula(&cfg, mode, shuffle)
        }
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Scan { target } => commands::cmd_scan(&cfg, target),
        Command::Synth => commands::cmd_synth(&cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
