use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fogflow_cli::{cmd_compare, cmd_sample_instance, cmd_simulate};

/// Hybrid-cloud workload allocation simulator.
#[derive(Parser)]
#[command(name = "fogflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every policy of a scenario and write traces, summary and chart.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Override the scenario seed (precedence: flag > FOGFLOW_SEED > file).
        #[arg(long)]
        seed: Option<u64>,
        /// Parse and validate the scenario, run nothing.
        #[arg(long)]
        validate_only: bool,
    },
    /// Run at least two policies on one instance and report cost savings.
    Compare {
        /// Scenario JSON file listing two or more policies.
        scenario: PathBuf,
        /// Output directory.
        #[arg(short, long)]
        out: PathBuf,
        /// Override the scenario seed (precedence: flag > FOGFLOW_SEED > file).
        #[arg(long)]
        seed: Option<u64>,
        /// Parse and validate the scenario, run nothing.
        #[arg(long)]
        validate_only: bool,
    },
    /// Sample a concrete topology and application from per-kind intervals.
    SampleInstance {
        /// Ranges JSON file.
        ranges: PathBuf,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file for the instance fragment.
        #[arg(short, long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            seed,
            validate_only,
        } => cmd_simulate(&scenario, &out, seed, validate_only),
        Command::Compare {
            scenario,
            out,
            seed,
            validate_only,
        } => cmd_compare(&scenario, &out, seed, validate_only),
        Command::SampleInstance { ranges, seed, out } => cmd_sample_instance(&ranges, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
