//! Command-line front end: argument parsing, run configuration and the JSON
//! reports each subcommand writes.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod provenance;
pub mod reports;

use cli::{Cli, Command};
use commands::Outcome;
use config::{ConfigFile, Overrides, RunConfig};
use error::{CliError, CliResult};

/// Resolve configuration and dispatch, inside a sized thread pool when asked.
pub fn run(cli: Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    let file = g.config.as_deref().map(ConfigFile::load).transpose()?;
    let cfg = RunConfig::resolve(
        file,
        Overrides {
            rules: g.rules.clone(),
            analysis_date: g.analysis_date,
            seed: g.seed,
            significance: g.significance,
            out: g.out.clone(),
            strict: g.strict,
            ..Default::default()
        },
    )?;
    let dispatch = || match &cli.command {
        Command::Ingest(a) => commands::ingest(a, &cfg),
        Command::Score(a) => commands::score(a, &cfg),
        Command::Pyramid(a) => commands::pyramid(a, &cfg),
        Command::ValidateSurvey(a) => commands::validate_survey(a, &cfg),
        Command::Compare(a) => commands::compare(a, &cfg),
        Command::Synth(a) => commands::synth(a, &cfg),
    };
    match g.threads {
        Some(0) => Err(CliError::validation("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Analysis(format!("thread pool: {e}")))?
            .install(dispatch),
        None => dispatch(),
    }
}
