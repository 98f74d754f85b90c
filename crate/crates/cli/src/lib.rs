//! Batch front end for the subordinate CIR model.
//!
//! `subcir <command> --config run.json [--out FILE] [--format csv|json] [--threads N]`
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 numerical failure. Diagnostics go to standard error, one JSON object per
//! line.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use thiserror::Error;

use subcir::SubCirError;

use crate::config::{ConfigIssue, RunConfig};
use crate::output::Table;

/// Environment variable that overrides `mc.seed`.
pub const SEED_ENV: &str = "SUBCIR_SEED";

#[derive(Debug, Parser)]
#[command(name = "subcir", version, about = "Subordinate CIR default-intensity model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues, subordinate eigenvalues and norms.
    Spectrum(Common),
    /// Survival probabilities over a horizon grid.
    Survival(Common),
    /// Credit-spread term structure and its long-maturity limit.
    Spreads(Common),
    /// Prices of the claim in the `price` block.
    Price(Common),
    /// State-dependent Lévy density over a jump grid.
    Levy(Common),
    /// Killing rate over a state grid.
    Intensity(Common),
    /// Simulated paths of the time-changed process.
    Simulate(Common),
    /// Oracle and Monte Carlo cross-checks as a JSON report.
    Validate(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads for the Monte Carlo engine; results do not depend on it.
    #[arg(long)]
    pub threads: Option<NonZeroUsize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Spectrum(c)
            | Command::Survival(c)
            | Command::Spreads(c)
            | Command::Price(c)
            | Command::Levy(c)
            | Command::Intensity(c)
            | Command::Simulate(c)
            | Command::Validate(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Survival(_) => "survival",
            Command::Spreads(_) => "spreads",
            Command::Price(_) => "price",
            Command::Levy(_) => "levy",
            Command::Intensity(_) => "intensity",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration ({} issues)", .0.len())]
    Config(Vec<ConfigIssue>),
    #[error(transparent)]
    Numerical(#[from] SubCirError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("validation failed")]
    ValidationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
            // the model rejected a parameter combination the schema allows
            CliError::Numerical(SubCirError::InvalidParameter { .. }) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// One JSON object per diagnostic.
    fn diagnostics(&self) -> Vec<serde_json::Value> {
        let code = self.exit_code();
        match self {
            CliError::Config(issues) => issues
                .iter()
                .map(|i| json!({"level": "error", "exit_code": code, "pointer": i.pointer, "message": i.message}))
                .collect(),
            CliError::Numerical(SubCirError::InvalidParameter { name, msg }) => vec![json!({
                "level": "error",
                "exit_code": code,
                "pointer": parameter_pointer(name),
                "message": format!("{name}: {msg}"),
            })],
            other => vec![json!({"level": "error", "exit_code": code, "message": other.to_string()})],
        }
    }
}

/// Config block that owns a parameter rejected by the library.
fn parameter_pointer(name: &str) -> &'static str {
    match name {
        "maturity" | "rate" | "recovery" => "/price",
        "n_max" | "tol" | "t_min" | "quadrature" => "/numerics",
        "h" | "n_paths" | "business_times" => "/mc",
        "subordinator" | "gamma" | "C" | "alpha" | "eta" => "/model/subordinator",
        _ => "/model",
    }
}

fn emit(diag: &serde_json::Value) {
    let _ = writeln!(io::stderr().lock(), "{diag}");
}

/// Reads and validates a configuration file, applying the seed override.
pub fn load_config(path: &std::path::Path, seed_override: Option<&str>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg = RunConfig::from_json(&text).map_err(CliError::Config)?;
    if let Some(s) = seed_override {
        cfg.mc.seed = s.trim().parse().map_err(|_| {
            CliError::Config(vec![ConfigIssue {
                pointer: "/mc/seed".into(),
                message: format!("{SEED_ENV} must be an unsigned integer, got {s:?}"),
            }])
        })?;
    }
    Ok(cfg)
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_table(table: &Table, common: &Common) -> Result<usize, CliError> {
    let mut out = open_output(&common.out)?;
    let io_err = |source: io::Error| CliError::Io {
        path: common.out.as_ref().map_or("<stdout>".into(), |p| p.display().to_string()),
        source,
    };
    match common.format {
        Format::Csv => table.write_csv(&mut out).map_err(|e| io_err(e.into()))?,
        Format::Json => table.write_json(&mut out).map_err(io_err)?,
    }
    out.flush().map_err(io_err)?;
    Ok(table.rows.len())
}

fn execute(command: &Command, cfg: &RunConfig) -> Result<usize, CliError> {
    let common = command.common();
    let m = cfg.model()?;
    let table = match command {
        Command::Spectrum(_) => commands::spectrum(cfg, &m)?,
        Command::Survival(_) => commands::survival(cfg, &m)?,
        Command::Spreads(_) => commands::spreads(cfg, &m)?,
        Command::Price(_) => commands::price(cfg, &m)?,
        Command::Levy(_) => commands::levy(cfg, &m)?,
        Command::Intensity(_) => commands::intensity(cfg, &m)?,
        Command::Simulate(_) => {
            let (paths, k) = commands::simulate(cfg, &m)?;
            if common.format == Format::Csv {
                let mut out = open_output(&common.out)?;
                paths.write_csv_with_intensity(&mut out, &k)?;
                out.flush().map_err(|source| CliError::Io {
                    path: "<output>".into(),
                    source,
                })?;
                return Ok(paths.paths.len() * paths.business_times.len());
            }
            commands::path_table(&paths, &k)
        }
        Command::Validate(_) => {
            let report = validate::run(cfg, &m)?;
            let mut out = open_output(&common.out)?;
            let io_err = |source: io::Error| CliError::Io {
                path: "<output>".into(),
                source,
            };
            serde_json::to_writer_pretty(&mut out, &report.to_json()).map_err(|e| io_err(e.into()))?;
            writeln!(out).and_then(|_| out.flush()).map_err(io_err)?;
            return if report.passed() {
                Ok(report.checks.len())
            } else {
                Err(CliError::ValidationFailed)
            };
        }
    };
    write_table(&table, common)
}

fn dispatch(cli: &Cli, seed_override: Option<&str>) -> Result<usize, CliError> {
    let common = cli.command.common();
    let cfg = load_config(&common.config, seed_override)?;
    match common.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.get())
                .build()
                .map_err(|e| CliError::Io {
                    path: "<thread pool>".into(),
                    source: io::Error::other(e),
                })?;
            pool.install(|| execute(&cli.command, &cfg))
        }
        None => execute(&cli.command, &cfg),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            emit(&json!({"level": "error", "exit_code": 2, "message": e.to_string().trim_end()}));
            return 2;
        }
    };
    let seed = std::env::var(SEED_ENV).ok();
    match dispatch(&cli, seed.as_deref()) {
        Ok(rows) => {
            emit(&json!({"level": "info", "command": cli.command.name(), "records": rows}));
            0
        }
        Err(e) => {
            for d in e.diagnostics() {
                emit(&d);
            }
            e.exit_code()
        }
    }
}
