//! `rapflow`: analytic solver and Monte Carlo simulator for fluid queues
//! driven by rational-arrival-process regimes. Exit codes: 0 success, 2
//! invalid input, 3 numerical failure, 64 usage error.

mod commands;
mod model_file;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "rapflow", version, about = "Fluid-queue solver for RAP-modulated input")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct Common {
    /// Model file (JSON)
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Report format written to stdout
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// First return to the starting level from above
    Return,
    /// Stationary law of the regulated queue
    Stationary,
    /// Descent x below the starting level
    Hitting,
}

#[derive(Args)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub target: Target,
    /// Master seed; every random command demands one explicitly
    #[arg(long)]
    pub seed: u64,
    /// Independent paths (return/hitting targets)
    #[arg(long)]
    pub paths: Option<u64>,
    /// Per-path time horizon (return/hitting targets)
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Depth below the start (hitting target)
    #[arg(long)]
    pub x: Option<f64>,
    /// Observed path length after burn-in (stationary target)
    #[arg(long)]
    pub total_time: Option<f64>,
    /// Discarded warm-up time (stationary target)
    #[arg(long)]
    pub burn_in: Option<f64>,
    /// Histogram edges a,b,... (stationary target)
    #[arg(long, value_name = "A,B,...")]
    pub grid: Option<String>,
    /// Starting orbit over the up regime, overriding the file's alpha
    #[arg(long, value_name = "A,B,...")]
    pub alpha: Option<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse the model file and report its shape
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// First-return matrix of the censored two-regime model
    Psi {
        #[command(flatten)]
        common: Common,
        /// Stop when the iteration step falls below this
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_name = "N")]
        max_iter: Option<usize>,
    },
    /// Return probability and landing orbit from the starting vector
    FirstReturn {
        #[command(flatten)]
        common: Common,
        /// Starting orbit over the up regime, overriding the file's alpha
        #[arg(long, value_name = "A,B,...")]
        alpha: Option<String>,
    },
    /// Downward-record orbit at depth x below the start
    Record {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long, value_name = "A,B,...")]
        alpha: Option<String>,
    },
    /// Probability of ever descending x below the start
    Hitting {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long, value_name = "A,B,...")]
        alpha: Option<String>,
    },
    /// Expected crossing orbits of the level x above the start
    Crossings {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: f64,
        #[arg(long, value_name = "A,B,...")]
        alpha: Option<String>,
    },
    /// Stationary law of the regulated queue
    Stationary {
        #[command(flatten)]
        common: Common,
        /// Report interval masses over these bin edges
        #[arg(long, value_name = "A,B,...")]
        grid: Option<String>,
    },
    /// Monte Carlo estimate of a target quantity
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Analytic value and Monte Carlo estimate side by side with z-scores
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate { common }
            | Command::Psi { common, .. }
            | Command::FirstReturn { common, .. }
            | Command::Record { common, .. }
            | Command::Hitting { common, .. }
            | Command::Crossings { common, .. }
            | Command::Stationary { common, .. }
            | Command::Simulate { common, .. }
            | Command::Compare { common, .. } => common,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable or ill-formed files, inconsistent flags.
    Input(String),
    /// The computation ran but failed numerically.
    Numerical(String),
    Core(rapflow_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<rapflow_core::Error> for CliError {
    fn from(e: rapflow_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => {
                if e.is_validation() {
                    2
                } else {
                    3
                }
            }
        }
    }
}

/// RAPFLOW_THREADS caps the rayon pool used by the simulation fan-out.
fn install_thread_cap() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RAPFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        CliError::Input(format!(
            "RAPFLOW_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    if n == 0 {
        return Err(CliError::Input(
            "RAPFLOW_THREADS must be a positive integer, got 0".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the worker pool: {e}")))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(64);
                }
            }
        }
    };

    let echo: String = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let started = Instant::now();
    let outcome = install_thread_cap().and_then(|()| commands::run(&cli.command, &echo));

    match outcome {
        Ok(mut report) => {
            report.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(ms) = report.wall_time_ms {
                eprintln!("wall-time: {ms:.3} ms");
            }
            let bytes = match cli.command.common().format {
                Format::Json => report::emit_json(&report),
                Format::Csv => report::emit_csv(&report),
            };
            print!("{bytes}");
            if let Some(f) = &report.failure {
                eprintln!("{f}");
                std::process::exit(3);
            }
        }
        Err(err) => {
            eprintln!("{err}");
            eprintln!("wall-time: {:.3} ms", started.elapsed().as_secs_f64() * 1e3);
            std::process::exit(err.exit_code());
        }
    }
}
