//! Command-line front end: synthetic data generation, fitting, method
//! comparisons and exports, driven by a versioned config file.

pub mod commands;
pub mod config;
pub mod report;
pub mod runner;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Outcome, Overrides};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "multihntf", version, about = "Hierarchical nonnegative tensor factorization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic hierarchical tensor and its ground truth.
    Synth(CommonArgs),
    /// Fit one method for every configured seed.
    Fit(CommonArgs),
    /// Fit several methods over all seeds and tabulate medians.
    Compare(CommonArgs),
    /// Write heatmaps and keyword lists for a saved chain.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long)]
    pub config: PathBuf,
    /// Use this single seed instead of the configured ones.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent fits (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Chain JSON to export, overriding `export.chain`.
    #[arg(long)]
    pub chain: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            out: self.out.clone(),
            jobs: self.jobs,
            chain: None,
        }
    }
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Synth(a) => commands::cmd_synth(&RunConfig::load(&a.config)?, &a.overrides()),
        Command::Fit(a) => commands::cmd_fit(&RunConfig::load(&a.config)?, &a.overrides()),
        Command::Compare(a) => commands::cmd_compare(&RunConfig::load(&a.config)?, &a.overrides()),
        Command::Export(a) => {
            let mut ov = a.common.overrides();
            ov.chain = a.chain.clone();
            commands::cmd_export(&RunConfig::load(&a.common.config)?, &ov)
        }
    }
}
