//! The `tablogic` command line: one subcommand per pipeline stage.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{ConfigArgs, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "tablogic",
    version,
    about = "Logical-fidelity evaluation for table-to-text generation"
)]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the selected metrics and write a JSON report to --output.
    Evaluate,
    /// Train the candidate ranker on --predictions (sentences true of their tables).
    TrainRanker,
    /// Synthesize candidate programs for every sentence in --predictions.
    Synthesize,
    /// Rank the candidate programs of one sentence.
    Parse {
        #[arg(long)]
        table_id: String,
        #[arg(long)]
        sentence: String,
        /// How many programs to print.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Write adversarial perturbations of the sentences in --predictions.
    Perturb {
        /// Draw entity replacements from every text column.
        #[arg(long)]
        cross_table: bool,
    },
    /// Write entity-masked templates of the sentences in --predictions.
    Template,
    /// Linearize every table, or one partial table per sentence when
    /// --predictions is given.
    Linearize,
    /// Load every table of --manifest, or a release checkout, and summarize.
    IngestCheck {
        /// Root of a release checkout with {train,val,test}_lm.json and all_csv/.
        #[arg(long)]
        release: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> ExitCode {
    let result = RunConfig::resolve(&cli.config)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
