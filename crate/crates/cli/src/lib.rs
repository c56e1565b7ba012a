//! Command-line front end for the `sparsecls` library.

pub mod config;
pub mod cv;
pub mod error;
pub mod fit;
pub mod gen;
pub mod method;
pub mod output;
pub mod sweep;
pub mod theory;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, EXIT_OK, EXIT_USAGE};
use crate::method::Method;

#[derive(Debug, Parser)]
#[command(name = "sparsecls", version, about = "Exact sparse classification experiments")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML config file with one table per subcommand
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// sparse-logistic, sparse-svm, lasso-logistic or lasso-svm
    #[arg(long, global = true, value_name = "NAME")]
    pub method: Option<Method>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Relative optimality tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Dataset CSV (fit, cv)
    #[arg(long, global = true, value_name = "PATH")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its truth vector
    Gen,
    /// Fit one classifier to a CSV dataset
    Fit,
    /// Run methods over a grid of sample sizes and seeds
    Sweep,
    /// Check closed forms and bounds against simulation
    Theory,
    /// Cross-validate k and gamma (or lambda) on a dataset
    Cv,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let common = &cli.common;
    if let Some(w) = common.workers {
        if w == 0 {
            return error::usage("--workers must be at least 1");
        }
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let file = config::load(common.config.as_deref())?;
    match cli.command {
        Command::Gen => gen::run(common, &file.gen),
        Command::Fit => fit::run(common, &file.fit),
        Command::Sweep => sweep::run(common, &file.sweep),
        Command::Theory => theory::run(common, &file.theory),
        Command::Cv => cv::run(common, &file.cv),
    }
}
