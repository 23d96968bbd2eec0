//! Batch front-end: `bosonic-control <command> --config cfg.json --out dir`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bosonic_control::experiment::{run, ExperimentError};

#[derive(Parser)]
#[command(name = "bosonic-control", version, about = "Control experiments on polynomial bosonic Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.json and artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for sampled states; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Real Lie closure of i H for the listed hamiltonians.
    Closure(Common),
    /// Symbolic propagation of controllability along a coupling graph.
    Propagation(Common),
    /// Recurrence time and certificate for a spectrum.
    Recur(Common),
    /// Forward-time stand-in for exp(-H s).
    Invert(Common),
    /// Trotter convergence table.
    Trotter(Common),
    /// Group-commutator convergence table.
    Commutator(Common),
    /// Compile targets into verified forward-time sequences.
    Compile(Common),
    /// Reachability report on a coupled chain.
    ChainDemo(Common),
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Closure(c) => ("closure", c),
            Command::Propagation(c) => ("propagation", c),
            Command::Recur(c) => ("recur", c),
            Command::Invert(c) => ("invert", c),
            Command::Trotter(c) => ("trotter", c),
            Command::Commutator(c) => ("commutator", c),
            Command::Compile(c) => ("compile", c),
            Command::ChainDemo(c) => ("chain-demo", c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let (name, common) = Cli::parse().command.split();
    if let Some(jobs) = common.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: cannot set up {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(2);
        }
    };
    let outcome = match run(name, &text, common.seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_usage() { 2 } else { 1 });
        }
    };
    if let Err(e) = outcome.write_to(&common.out) {
        eprintln!("error: {}", ExperimentError::from(e));
        return ExitCode::from(1);
    }
    println!("{name}: {} ({})", if outcome.ok { "ok" } else { "FAILED" }, common.out.join("report.json").display());
    if let Some(failures) = outcome.report["failures"].as_array() {
        for f in failures {
            eprintln!("  {}", f.as_str().unwrap_or_default());
        }
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
