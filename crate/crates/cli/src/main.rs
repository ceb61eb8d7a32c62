use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nhtherm::config::SimulationConfig;
use nhtherm::experiments::{run_evolve, run_scan, run_sectors, write_evolve, write_scan, write_sectors, GridRange};
use nhtherm::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PT_BROKEN: u8 = 3;
const EXIT_NO_CONVERGENCE: u8 = 4;

#[derive(Parser)]
#[command(name = "nhtherm", version, about = "Thermalization of non-Hermitian systems in a thermal bath")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and compare it with the Boltzmann references.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Long-term BTE and RTE states over an (h_y, h_z) grid.
    Scan {
        #[arg(long)]
        config: PathBuf,
        /// h_y grid as start:end:points.
        #[arg(long, allow_hyphen_values = true)]
        hy: String,
        /// h_z grid as start:end:points (h_x for the qubit).
        #[arg(long, allow_hyphen_values = true)]
        hz: String,
        /// Also run points near the exceptional line.
        #[arg(long)]
        include_exceptional: bool,
    },
    /// Pauli sector report of the BTE generator.
    Sectors {
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse(_) | Error::InvalidSpec(_) | Error::InvalidBath(_) => EXIT_CONFIG,
        Error::PtBroken { .. } => EXIT_PT_BROKEN,
        _ => EXIT_FAILURE,
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(exit_code(&e))
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Evolve { config } => {
            let cfg = SimulationConfig::load(&config)?;
            let out = run_evolve(&cfg)?;
            report_written(&write_evolve(&cfg, &out)?);
            let s = &out.summary;
            println!(
                "status {} converged_at {} V_bbs {} V_brs {}",
                s["status"].as_str().unwrap_or("?"),
                s["converged_at"],
                s["variance_bbs"]["induced"],
                s["variance_brs"]["induced"]
            );
            if out.converged() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("no convergence within t = {}", cfg.t_end());
                Ok(ExitCode::from(EXIT_NO_CONVERGENCE))
            }
        }
        Command::Scan { config, hy, hz, include_exceptional } => {
            let cfg = SimulationConfig::load(&config)?;
            let hy = GridRange::parse(&hy).map_err(|e| Error::Config { key: "--hy".into(), message: e.to_string() })?;
            let hz = GridRange::parse(&hz).map_err(|e| Error::Config { key: "--hz".into(), message: e.to_string() })?;
            let out = run_scan(&cfg, hy, hz, include_exceptional)?;
            report_written(&write_scan(&cfg, &out)?);
            let failed = out.rows.iter().filter(|r| !r.errors.is_empty()).count();
            println!("{} points, {} with errors or skipped", out.rows.len(), failed);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sectors { config } => {
            let cfg = SimulationConfig::load(&config)?;
            let report = run_sectors(&cfg)?;
            println!("wrote {}", write_sectors(&cfg, &report)?.display());
            println!(
                "{} sectors, condition satisfied: {}",
                report["sectors"].as_array().map_or(0, Vec::len),
                report["condition_satisfied"]
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG as i32 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e),
    }
}
