//! `qudit-qkd`: security thresholds, information-curve scans, protocol
//! simulation and oracle verification for qudit key distribution.
//!
//! Exit status: 0 on success, 1 when a check or solver fails, 2 on usage
//! errors. Data goes to stdout (or `--out`), diagnostics to stderr.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::RangedU64ValueParser;
use clap::{Parser, Subcommand};

use commands::{BoundArg, ProtocolArg, VERIFY_SAMPLES};
use output::{CommandOutput, Format, Status, UsageError};
use qudit_qkd::bounds::BISECTION_TOL;
use qudit_qkd::oracle::ORACLE_MAX_DIM;

#[derive(Parser, Debug)]
#[command(
    name = "qudit-qkd",
    version,
    about = "Security thresholds for qudit quantum key distribution"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write the payload to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reproduce the disturbance-threshold table for d in {2,3,4,5,10}.
    Table1,
    /// Solve a single threshold.
    Thresholds {
        #[arg(long, value_parser = parse_dim)]
        d: usize,
        #[arg(long, value_enum)]
        bound: BoundArg,
        /// Largest accepted residual of the defining equation.
        #[arg(long, default_value_t = BISECTION_TOL)]
        tol: f64,
    },
    /// Sample I_AB, I_AE and the key-rate bound on a fidelity grid.
    Scan {
        #[arg(long, value_parser = parse_dim)]
        d: usize,
        #[arg(long, value_enum, default_value = "two-bases")]
        protocol: ProtocolArg,
        /// Defaults to the smallest fidelity the protocol allows.
        #[arg(long)]
        f_min: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        f_max: f64,
        #[arg(long, default_value_t = 101, value_parser = RangedU64ValueParser::<usize>::new().range(2..))]
        steps: usize,
        /// Add a column with the bound scaled by the sifting yield.
        #[arg(long)]
        raw_rate: bool,
    },
    /// Monte Carlo run of the sifted protocol against the optimal cloner.
    Simulate {
        #[arg(long, value_parser = parse_dim)]
        d: usize,
        #[arg(long, value_enum, default_value = "two-bases")]
        protocol: ProtocolArg,
        #[arg(long)]
        disturbance: f64,
        #[arg(long, default_value_t = 1_000_000, value_parser = RangedU64ValueParser::<u64>::new().range(1..))]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check every closed form against the state-vector oracles.
    Verify {
        #[arg(
            long,
            default_value_t = 5,
            value_parser = RangedU64ValueParser::<usize>::new().range(2..=ORACLE_MAX_DIM as u64)
        )]
        d_max: usize,
        /// Fidelities sampled per cloner family and dimension.
        #[arg(long, default_value_t = VERIFY_SAMPLES)]
        samples: usize,
    },
}

fn parse_dim(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if d >= 2 => Ok(d),
        Ok(d) => Err(format!("dimension must be at least 2, got {d}")),
        Err(e) => Err(e.to_string()),
    }
}

fn dispatch(command: &Command) -> anyhow::Result<CommandOutput> {
    match *command {
        Command::Table1 => commands::table1(),
        Command::Thresholds { d, bound, tol } => commands::thresholds(d, bound, tol),
        Command::Scan {
            d,
            protocol,
            f_min,
            f_max,
            steps,
            raw_rate,
        } => commands::scan(d, protocol, f_min, f_max, steps, raw_rate),
        Command::Simulate {
            d,
            protocol,
            disturbance,
            rounds,
            seed,
        } => commands::simulate(d, protocol, disturbance, rounds, seed),
        Command::Verify { d_max, samples } => commands::verify(d_max, samples),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match dispatch(&cli.command) {
        Ok(out) => out,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = out.emit(cli.format, cli.out.as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match &out.status {
        Status::Ok => ExitCode::SUCCESS,
        Status::Failed(problems) => {
            for p in problems {
                eprintln!("failed: {p}");
            }
            ExitCode::from(1)
        }
    }
}
