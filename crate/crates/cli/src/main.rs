//! `keen`: command-line driver for the Keen–Goodwin debt model.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use keen_core::io::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "keen", version, about = "Keen–Goodwin debt model: equilibria, Hopf analysis and limit cycles")]
pub struct Cli {
    /// Run configuration (`key = value` lines under `[section]` headers).
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    pub dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the calibrated Phillips and investment coefficients.
    Calibrate,
    /// Interior, boundary and infinite-debt equilibria.
    Equilibria,
    /// Spectrum of the interior equilibrium, or a sweep over κ₂.
    Spectrum {
        #[arg(long)]
        kappa2: Option<f64>,
        /// Sweep the `[sweep]` window instead of a single κ₂.
        #[arg(long, conflicts_with = "kappa2")]
        sweep: bool,
    },
    /// Integrate a trajectory and sample it on a uniform grid.
    Simulate {
        #[arg(long, default_value_t = 100.0)]
        t_end: f64,
        /// Initial state `omega,lambda,d`; defaults to the interior equilibrium.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
    },
    /// Locate the Hopf point by bisection and compare with the closed form.
    Hopf,
    /// Trace the limit-cycle branch below the Hopf point.
    Branch {
        /// Explicit κ₂ values instead of the `[branch]` gap spacing.
        #[arg(long, value_delimiter = ',')]
        kappa2: Option<Vec<f64>>,
    },
    /// Phase–amplitude reduction tables of the zero-interest cycle family.
    Reduce,
    /// Line chart of CSV columns as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        x: String,
        /// One or more comma-separated columns.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let config = match &cli.config {
        Some(path) => match RunConfig::from_path(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(3);
            }
        },
        None => RunConfig::default(),
    };
    match commands::run(&cli, config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Caps the worker pool at `KEEN_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("KEEN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| format!("KEEN_THREADS must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
