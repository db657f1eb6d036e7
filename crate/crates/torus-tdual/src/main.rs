use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use torus_tdual::cli::{run_text, run_verify, CliError, Report, RunFlags};

#[derive(Parser)]
#[command(name = "tdual", about = "Exact T-duality computations for branes on tori")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Seed for every randomized choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance for numeric conjugator and subspace checks.
    #[arg(long, global = true, default_value_t = torus_tdual::numeric::DEFAULT_TOL)]
    tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    NormalForm { input: PathBuf },
    GammaH { input: PathBuf },
    Pushforward { input: PathBuf },
    PhiDual { input: PathBuf },
    SpDecompose { input: PathBuf },
    Tdualize { input: PathBuf },
    HigherRank { input: PathBuf },
    Semiflat { input: PathBuf },
    /// Runs a property suite (`all` or one suite name).
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

fn file_command(c: &Command) -> Option<(&'static str, &PathBuf)> {
    Some(match c {
        Command::NormalForm { input } => ("normal-form", input),
        Command::GammaH { input } => ("gamma-h", input),
        Command::Pushforward { input } => ("pushforward", input),
        Command::PhiDual { input } => ("phi-dual", input),
        Command::SpDecompose { input } => ("sp-decompose", input),
        Command::Tdualize { input } => ("tdualize", input),
        Command::HigherRank { input } => ("higher-rank", input),
        Command::Semiflat { input } => ("semiflat", input),
        Command::Verify { .. } => return None,
    })
}

fn run(args: &Args) -> Result<Report, CliError> {
    let flags = RunFlags { seed: args.seed, tol: args.tol };
    match (&args.command, file_command(&args.command)) {
        (Command::Verify { suite }, _) => run_verify(suite, &flags),
        (_, Some((name, path))) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
            run_text(name, &text, &flags)
        }
        _ => unreachable!("every other command carries an input file"),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(report) => {
            let text = report.to_pretty();
            match &args.out {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, &text) {
                        eprintln!("error: cannot write {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
