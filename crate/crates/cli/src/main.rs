//! `paultrap`: command-line front end for the trap, QND and propagator library.

mod args;
mod commands;
mod manifest;
mod record;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.global.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Trajectory => commands::trajectory(&cli.global),
        Command::Stability(a) => commands::stability(&cli.global, a),
        Command::QndCheck => commands::qnd_check(&cli.global),
        Command::Probability(a) => commands::probability(&cli.global, a),
        Command::Oracle(a) => commands::oracle(&cli.global, a),
    };
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
