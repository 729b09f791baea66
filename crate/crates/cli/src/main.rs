//! `polarmoments`: moments, scans, simulation, reconstruction and
//! classification of two-mode polarization states from the command line.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polarmoments::Error;

#[derive(Parser)]
#[command(name = "polarmoments", version, about = "Polarization moments of quantum states of light")]
struct Cli {
    /// Add a `generated_at` field (seconds since the epoch) to JSON reports.
    #[arg(long, global = true)]
    timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StateArg {
    /// State spec: a JSON file, inline JSON, or a named state (`h2`, `hv`,
    /// `unpolarized2`, ...).
    #[arg(long)]
    state: String,
}

#[derive(Subcommand)]
enum Command {
    /// Stokes vector, covariance matrix, moment packs and uncertainty relation.
    Moments {
        #[command(flatten)]
        state: StateArg,
        /// Highest moment order.
        #[arg(long, default_value_t = 4)]
        order: u32,
        /// `N` for one excitation manifold or `averaged`; defaults to the
        /// only manifold of single-manifold states.
        #[arg(long)]
        manifold: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Central moment of one order over a direction grid, written as TSV.
    Scan {
        #[command(flatten)]
        state: StateArg,
        #[arg(long)]
        order: u32,
        /// `ico:L`, `latlon:TxP` or `fib:N`.
        #[arg(long, default_value = "ico:3")]
        grid: String,
        #[arg(long)]
        manifold: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulated counting protocol; writes counts and observation files.
    Simulate {
        #[command(flatten)]
        state: StateArg,
        /// Detector configuration JSON file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Detector preset: `unit`, `eff11` or `eff20`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Expected counts instead of sampling.
        #[arg(long)]
        exact: bool,
        /// Highest order to observe.
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Third-order direction set: `tilted` or `minimal`.
        #[arg(long, default_value = "tilted")]
        variant: String,
        /// Output directory for `counts.tsv`, `observations-N<n>.tsv` and
        /// `empirical.json`.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Moment packs from an observations file.
    Reconstruct {
        #[arg(long)]
        observations: PathBuf,
        /// Highest order to reconstruct; defaults to the highest observed.
        #[arg(long)]
        order: Option<u32>,
        /// Reference state for a misalignment fit.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Order-by-order isotropy and the three-photon class.
    Classify {
        #[arg(long, conflicts_with = "reconstruction", required_unless_present = "reconstruction")]
        state: Option<String>,
        /// A report written by `reconstruct`.
        #[arg(long)]
        reconstruction: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        order: u32,
        #[arg(long)]
        manifold: Option<String>,
        /// Relative spread below which an order counts as isotropic.
        #[arg(long, default_value_t = polarmoments::classifier::DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter counts of polarization and full-state tomography.
    Counts {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::RankDeficient { .. } => 4,
        Error::NotHermitian { .. }
        | Error::BadTrace { .. }
        | Error::NotPositive { .. }
        | Error::UncertaintyViolation(_) => 5,
        Error::Io(_) => 6,
        Error::UnrealizableClass(_) => 7,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
