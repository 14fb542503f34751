//! Pipeline driver: each subcommand runs one stage against a run
//! directory of plain-file artifacts, so stages can be re-run and
//! inspected independently. One master seed (config or --seed) fans out
//! to per-stage derived seeds; identical inputs and seed reproduce every
//! artifact byte for byte.

mod artifacts;
mod config;
mod error;
mod paths;
mod stages;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bridgewatch::ingest::ParseMode;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::paths::RunDir;

#[derive(Parser)]
#[command(name = "bridgewatch", version, about = "Cross-community discourse and behavior analysis pipeline")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config value.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, overriding the config value.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Fail on malformed input lines (default).
    #[arg(long, global = true, overrides_with = "lenient")]
    strict: bool,
    /// Skip malformed input lines and count them instead.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn parse_mode(&self) -> ParseMode {
        if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw records and select dual-community users.
    Ingest {
        /// Newline-delimited JSON record files.
        #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
        records: Vec<PathBuf>,
        /// Newline-delimited JSON user metadata files.
        #[arg(long, num_args = 1.., value_name = "PATH")]
        meta: Vec<PathBuf>,
    },
    /// Train a topic model and export summaries, distances, coordinates.
    Topics {
        #[arg(long, value_enum, default_value_t = Cohort::Dual)]
        cohort: Cohort,
    },
    /// Score sentiment, assign topics, and detect outlier users.
    Sentiment,
    /// Compute behavior profiles and anomaly flags for dual users.
    Flags,
    /// Build the subreddit co-participation graph and its exports.
    Graph,
    /// Generate a synthetic corpus with planted anomalies.
    Synth {
        /// TOML generator spec.
        #[arg(long, value_name = "PATH")]
        spec: PathBuf,
    },
    /// Render the Markdown run report from existing stage outputs.
    Report,
}

/// Which document population a topic model is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Cohort {
    /// Users active in both focal communities.
    Dual,
    /// Every user in the corpus.
    All,
}

impl Cohort {
    pub fn label(self) -> &'static str {
        match self {
            Cohort::Dual => "dual",
            Cohort::All => "all",
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = RunConfig::load(cli.config.as_deref(), cli.seed, cli.out.as_deref())?;
    let dir = RunDir::new(&config.out_dir);
    dir.ensure()?;
    config.echo(&dir)?;

    match &cli.command {
        Command::Ingest { records, meta } => {
            stages::ingest::run(&config, &dir, records, meta, cli.parse_mode())
        }
        Command::Topics { cohort } => stages::topics::run(&config, &dir, *cohort),
        Command::Sentiment => stages::sentiment::run(&config, &dir),
        Command::Flags => stages::flags::run(&config, &dir),
        Command::Graph => stages::graph::run(&config, &dir),
        Command::Synth { spec } => stages::synth::run(&dir, spec),
        Command::Report => stages::report::run(&config, &dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
