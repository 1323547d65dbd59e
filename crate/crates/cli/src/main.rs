//! `bidlab`: run auction experiments, print benchmark tables and analyse
//! transcripts.

mod analyze;
mod batch;
mod failure;
mod oracle;
mod run;

use clap::{Parser, Subcommand};
use failure::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "bidlab", version, about = "Auction experiments with scripted and model-backed bidders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every experiment in a run file.
    Run(run::RunArgs),
    /// Print a benchmark strategy table as CSV.
    Oracle(oracle::OracleArgs),
    /// Build the report directory from transcripts.
    Analyze {
        /// Transcript files, directories or glob patterns.
        #[arg(required = true)]
        transcripts: Vec<String>,
        /// Report directory.
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Re-run a transcript from its completion cache and report on it.
    Replay {
        transcript: PathBuf,
        /// Report directory; the replayed transcript is written here too.
        #[arg(long, default_value = "replay")]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run(args) => run::run(args),
        Command::Oracle(args) => oracle::oracle(args),
        Command::Analyze { transcripts, out } => analyze::analyze(&transcripts, &out),
        Command::Replay { transcript, out } => run::replay(&transcript, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return Failure::usage(e.to_string()).report(),
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
