use std::process::ExitCode;

use clap::Parser;
use srpe_cli::{run, Cli, Outcome, SEED_VAR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = std::env::var(SEED_VAR).ok();
    match run(&cli, seed.as_deref()) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Bottom(why)) => {
            eprintln!("⊥: {why}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
