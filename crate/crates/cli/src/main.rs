use std::process::ExitCode;

use clap::Parser;
use rfm_pyramid_cli::cli::Cli;

fn main() -> ExitCode {
    match rfm_pyramid_cli::run(Cli::parse()) {
        Ok(outcome) => {
            for note in &outcome.notes {
                println!("{note}");
            }
            for path in &outcome.written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
