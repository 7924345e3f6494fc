use std::path::PathBuf;
use std::process::ExitCode;

use bwave_cli::{parse_scenario, run_subcommand, CliError, Command, Flags};
use clap::Parser;

/// Bilinear optimal control of the damped wave equation.
#[derive(Debug, Parser)]
#[command(name = "bwave", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Halve Δx and Δt this many times.
    #[arg(long, default_value_t = 0)]
    refine: u32,
    /// Ratio between successive horizons in decay and sweep runs.
    #[arg(long)]
    horizon_factor: Option<usize>,
}

fn run(args: &Args) -> Result<i32, CliError> {
    let text = std::fs::read_to_string(&args.scenario).map_err(|e| CliError::io(&args.scenario, e))?;
    let scenario = parse_scenario(&text)?;
    let flags = Flags {
        out: args.out.clone(),
        seed: args.seed,
        refine: args.refine,
        horizon_factor: args.horizon_factor,
    };
    let outcome = run_subcommand(args.command, &scenario, &flags)?;
    println!("{}", outcome.summary.trim_end());
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if let Some(e) = &outcome.failure {
        eprintln!("{}", e.machine_line());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
