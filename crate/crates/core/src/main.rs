use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dkg::analysis::ScatterKind;
use dkg::clifford::{DEFAULT_SAMPLES, DEFAULT_SEED};
use dkg::commands;
use dkg::config::Config;

#[derive(Parser)]
#[command(name = "dkg", version, about = "Dirac-Klein-Gordon numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact gamma-matrix identities on seeded random samples.
    VerifyAlgebra {
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Evolves a configuration and writes a run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Refinement study of the structural identities along solutions.
    CheckStructure {
        #[arg(long)]
        config: PathBuf,
    },
    /// Power-law fit of a sup-norm column of a run directory.
    FitDecay {
        #[arg(long)]
        dir: PathBuf,
        /// `psi` or `phi`.
        #[arg(long, default_value = "psi")]
        field: String,
        #[arg(long, default_value_t = 5.0)]
        t_min: f64,
        #[arg(long, default_value_t = 12.0)]
        t_max: f64,
    },
    /// Relative oscillation of the tracked energies of a run directory.
    Monitor {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        t_after: f64,
        #[arg(long, default_value_t = 0.1)]
        bound: f64,
        /// Reference time of the ghost growth check.
        #[arg(long, default_value_t = 6.0)]
        ghost_ref: f64,
    },
    /// Back-evolves the snapshots of a run directory with the free flow.
    Scatter {
        #[arg(long)]
        dir: PathBuf,
        /// `dirac` or `wave`.
        #[arg(long, default_value = "dirac")]
        kind: String,
        /// Use the continuum symbol instead of the lattice RK4 symbol.
        #[arg(long)]
        exact: bool,
    },
}

fn print_json<T: serde::Serialize>(v: &T) -> dkg::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn main_inner(cli: Cli) -> dkg::Result<bool> {
    match cli.command {
        Command::VerifyAlgebra { samples, seed } => {
            let reps = commands::verify_algebra(samples, seed);
            print_json(&reps)?;
            Ok(reps.iter().all(|r| r.passed))
        }
        Command::Run { config, out } => {
            let cfg = Config::load(&config)?;
            let o = commands::run_config(&cfg, Some(&out))?;
            print_json(&o.record)?;
            Ok(true)
        }
        Command::CheckStructure { config } => {
            let reps = commands::check_structure(&Config::load(&config)?)?;
            print_json(&reps)?;
            Ok(reps.iter().all(|r| r.passed))
        }
        Command::FitDecay { dir, field, t_min, t_max } => {
            let r = commands::fit_decay_dir(&dir, &field, (t_min, t_max), None)?;
            commands::write_json(&dir.join(format!("decay_{field}.json")), &r)?;
            print_json(&r)?;
            Ok(true)
        }
        Command::Monitor { dir, t_after, bound, ghost_ref } => {
            let r = commands::monitor_dir(&dir, t_after, bound, Some(ghost_ref))?;
            commands::write_json(&dir.join("monitor.json"), &r)?;
            print_json(&r)?;
            Ok(r.passed)
        }
        Command::Scatter { dir, kind, exact } => {
            let k = ScatterKind::parse(&kind)?;
            let d = commands::scatter_dir(&dir, k, exact)?;
            let name = format!("scatter_{}{}.json", kind.to_ascii_lowercase(), if exact { "_exact" } else { "" });
            commands::write_json(&dir.join(name), &d)?;
            print_json(&d)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
