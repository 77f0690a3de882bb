//! `lqgame`: experiments on the coupled Riccati recursion of N-player LQ
//! games from the command line.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use commands::Task;
use failure::Failure;
use output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "lqgame", version, about = "Riccati-recursion experiments for N-player LQ games")]
struct Cli {
    /// JSON file of settings; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory for this invocation (default: lqgame-out/<command>-<time>-<pid>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check dimensions, symmetry, definiteness and stabilizability of a game.
    Validate(commands::Validate),
    /// Iterate the backward recursion from a terminal cost.
    Run(commands::Run),
    /// Classify the long-run behavior of the recursion.
    Classify(commands::Classify),
    /// Terminal-cost basin map for a scalar two-agent game.
    Basin(commands::Basin),
    /// Regime frequencies over random games.
    Ensemble(commands::Ensemble),
    /// Cycle-length histogram over random games.
    Census(commands::Census),
    /// Find stationary Nash equilibria.
    Equilibria(commands::Equilibria),
    /// Certify a candidate periodic equilibrium.
    VerifyCycle(commands::VerifyCycle),
    /// Roll out the closed loop under the finite-horizon equilibrium.
    Simulate(commands::Simulate),
}

fn launch<T>(flags: &T, file: &Map<String, Value>, out: Option<PathBuf>) -> Result<(), Failure>
where
    T: Task + Serialize + DeserializeOwned + Default,
{
    let (settings, log) = config::resolve(flags, file)?;
    for line in log {
        eprintln!("config: {line}");
    }
    let settings = settings.with_defaults();
    settings.check()?;
    let resolved = serde_json::to_value(&settings).expect("settings serialize");
    eprintln!("{} settings: {resolved}", T::NAME);

    let file_out = match file.get("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(Failure::Usage(format!("config key \"out\" must be a string, got {other}"))),
    };
    let dir = out.or(file_out).unwrap_or_else(|| output::default_dir(T::NAME));
    let mut out = OutputDir::create(&dir)?;
    out.json("config.json", "resolved settings", &resolved)?;
    let result = settings.execute(&mut out);
    let (code, message) = match &result {
        Ok(()) => (0, None),
        Err(f) => (f.exit_code(), Some(f.to_string())),
    };
    let path = out.path().to_path_buf();
    out.finish(T::NAME, &resolved, code, message.as_deref())?;
    eprintln!("outputs written to {}", path.display());
    result
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => config::read_config_file(path)?,
        None => Map::new(),
    };
    let out = cli.out;
    match &cli.command {
        Command::Validate(a) => launch(a, &file, out),
        Command::Run(a) => launch(a, &file, out),
        Command::Classify(a) => launch(a, &file, out),
        Command::Basin(a) => launch(a, &file, out),
        Command::Ensemble(a) => launch(a, &file, out),
        Command::Census(a) => launch(a, &file, out),
        Command::Equilibria(a) => launch(a, &file, out),
        Command::VerifyCycle(a) => launch(a, &file, out),
        Command::Simulate(a) => launch(a, &file, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
