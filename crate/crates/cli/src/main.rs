//! `rbw`: simulations, estimators and verification for random billiard
//! walks.

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::Failure;

#[derive(Parser)]
#[command(
    name = "rbw",
    version,
    about = "Random billiard walks in affine Weyl group arrangements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one trajectory as CSV.
    Simulate(commands::Simulate),
    /// Per-step variance from an ensemble and from the interaction series.
    Sigma(commands::Sigma),
    /// Total variation of the direction to uniform, with the decay fit.
    Mixing(commands::Mixing),
    /// Window frequencies of the cutting sequence.
    Freq(commands::Freq),
    /// Moment tensors of the rescaled displacement.
    Moments(commands::Moments),
    /// Conditional growth of the squared displacement.
    Growth(commands::Growth),
    /// Martingale approximation error along the block schedule.
    Martingale(commands::Martingale),
    /// Rescaled marginals and increments against Brownian motion.
    Functional(commands::Functional),
    /// Run the verification criteria.
    VerifyAll(commands::VerifyAll),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return report(&Failure {
                code: 4,
                kind: "Config",
                message: e.render().to_string().trim().to_string(),
                hint: None,
            });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => a.run(),
        Command::Sigma(a) => a.run(),
        Command::Mixing(a) => a.run(),
        Command::Freq(a) => a.run(),
        Command::Moments(a) => a.run(),
        Command::Growth(a) => a.run(),
        Command::Martingale(a) => a.run(),
        Command::Functional(a) => a.run(),
        Command::VerifyAll(a) => a.run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(&f),
    }
}

/// Prints the failure as one JSON object on stderr.
fn report(f: &Failure) -> ExitCode {
    let mut v = json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    if let Some(h) = &f.hint {
        v["hint"] = json!(h);
    }
    eprintln!("{v}");
    ExitCode::from(f.code)
}
