//! Command-line driver: config ingestion, pipeline orchestration and
//! report emission for the `trajexp` library.
//!
//! Exit codes: 0 success, 1 a requested verification failed, 2 usage or
//! config error, 3 runtime error.

pub mod commands;
pub mod config;
pub mod error;
pub mod problem;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use config::{Mode, Numeric, Overrides, RunConfig};
pub use error::{CliError, CliResult, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VERIFY_FAILED};

#[derive(Debug, Parser)]
#[command(name = "trajexp", version, about = "Asymptotic expansions of particle trajectories in decaying flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Expansion order N (overrides `order`).
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,
    /// Seed for randomized initial conditions (overrides `seed`).
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    /// Integrator tolerance (overrides `tol`).
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exponent table with decomposition counts.
    Semigroup(Common),
    /// Locate x* with the oracle, then compute zeta_1..zeta_N.
    Expand(Common),
    /// Expand and check every truncation against the oracle.
    Verify(Common),
    /// Run the 2D spectral solver and extract the leading decay.
    Simulate(Common),
    /// List built-in fixtures; with --out, write preset configs.
    Fixtures {
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

impl Common {
    pub fn load(&self) -> CliResult<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
        let overrides = Overrides {
            out: self.out.clone(),
            order: self.order,
            seed: self.seed,
            tol: self.tol,
        };
        RunConfig::load(path)?.resolve(&overrides)
    }
}

/// Timestamps live in a side file so reports stay byte-identical.
fn write_meta(cfg: &RunConfig, command: &str, started: SystemTime, elapsed: f64) -> CliResult<()> {
    let unix = started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let meta = json!({
        "command": command,
        "config_hash": cfg.hash(),
        "started_unix": unix,
        "elapsed_seconds": elapsed,
    });
    commands::write_json(&cfg.output_dir().join(format!("{command}.meta.json")), &meta)
}

/// Runs one command and returns its exit code; output goes to stdout.
pub fn run(command: Command) -> CliResult<i32> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let (cfg, name, code) = match command {
        Command::Fixtures { out } => {
            print!("{}", commands::cmd_fixtures(out.as_ref())?);
            return Ok(EXIT_OK);
        }
        Command::Semigroup(c) => {
            let cfg = c.load()?;
            let o = commands::cmd_semigroup(&cfg)?;
            print!("{}", o.table);
            (cfg, "semigroup", EXIT_OK)
        }
        Command::Expand(c) => {
            let cfg = c.load()?;
            let o = commands::cmd_expand(&cfg)?;
            print!("{}", o.summary);
            (cfg, "expand", EXIT_OK)
        }
        Command::Verify(c) => {
            let cfg = c.load()?;
            let o = commands::cmd_verify(&cfg)?;
            print!("{}", o.summary);
            (cfg, "verify", if o.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let o = commands::cmd_simulate(&cfg)?;
            print!("{}", o.summary);
            (cfg, "simulate", EXIT_OK)
        }
    };
    write_meta(&cfg, name, started, clock.elapsed().as_secs_f64())?;
    Ok(code)
}

/// Parses `args` and runs; errors are printed to stderr with a hint.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("hint: {h}");
            }
            e.exit_code()
        }
    }
}
