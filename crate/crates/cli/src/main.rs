use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use funnystrom::experiments::{self, Experiment, ExperimentConfig};
use funnystrom::Error;

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "funnystrom",
    version,
    about = "Run funNyström experiments and write CSV results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Paths {
    /// TOML experiment configuration.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Products with A against attained accuracy.
    BudgetCurve(Paths),
    /// Error against rank with bound overlays.
    AccuracyCurve(Paths),
    /// Wall-clock speed-up of low-rank products over Lanczos.
    Speedup(Paths),
    /// Log-determinant estimates at matched budgets.
    TraceDuel(Paths),
    /// funNyström++ over a grid of probe counts.
    FnppSweep(Paths),
    /// Empirical check of the error bounds.
    VerifyBounds(Paths),
}

impl Command {
    fn split(self) -> (Experiment, Paths) {
        match self {
            Command::BudgetCurve(p) => (Experiment::BudgetCurve, p),
            Command::AccuracyCurve(p) => (Experiment::AccuracyCurve, p),
            Command::Speedup(p) => (Experiment::Speedup, p),
            Command::TraceDuel(p) => (Experiment::TraceDuel, p),
            Command::FnppSweep(p) => (Experiment::FnppSweep, p),
            Command::VerifyBounds(p) => (Experiment::VerifyBounds, p),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => EXIT_IO,
        e if e.is_input_error() => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let (experiment, paths) = Cli::parse().command.split();
    let result = ExperimentConfig::load(&paths.config)
        .and_then(|cfg| experiments::run(experiment, &cfg))
        .and_then(|out| experiments::write_output(&out, &paths.out).map(|files| (out, files)));
    match result {
        Ok((out, files)) => {
            for f in &files {
                println!("{}", f.display());
            }
            if out.violations.is_empty() {
                ExitCode::SUCCESS
            } else {
                for v in &out.violations {
                    eprintln!("violation: {v}");
                }
                eprintln!("{experiment}: {} bound violation(s)", out.violations.len());
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
        Err(err) => {
            eprintln!("{experiment}: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::InvalidArgument("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Io("x".into())), EXIT_IO);
        assert_eq!(exit_code(&Error::DegenerateSketch("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::BoundViolation("x".into())), EXIT_NUMERICAL);
    }
}
