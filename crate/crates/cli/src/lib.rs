//! Command-line front end for the `sgm-core` solvers.
//!
//! Every subcommand produces one or more [`Table`]s that are written as CSV
//! (with a trailing `# key: value` block) or as a JSON array of records.

pub mod args;
pub mod commands;
pub mod output;

use std::io;

use sha2::{Digest, Sha256};
use sgm_core::par::{with_threads, Execution};
use sgm_core::SgmError;
use thiserror::Error;

pub use args::{Cli, Command, Format};
pub use output::Table;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Numerical(SgmError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Numerical(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn config(e: SgmError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SgmError> for CliError {
    fn from(e: SgmError) -> Self {
        match e {
            SgmError::Config(msg) => CliError::Config(msg),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    /// Work units (angular momenta) attempted and failed.
    pub units: usize,
    pub failed: usize,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        match self.failed {
            0 => 0,
            f if f < self.units => 4,
            _ => 3,
        }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Thread count from the flag, then `SGM_THREADS`; `None` means all CPUs.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SGM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("SGM_THREADS must be a positive integer, got `{v}`"))),
        _ => Ok(None),
    }
}

pub fn config_hash(command: &Command) -> Result<String, CliError> {
    let canonical = serde_json::to_string(command)?;
    Ok(format!("{:x}", Sha256::digest(canonical.as_bytes())))
}

/// Runs one subcommand and stamps the common metadata on every table.
pub fn execute(command: &Command, exec: Execution) -> Result<Report, CliError> {
    let mut report = match command {
        Command::SgmTable(a) => commands::sgm_table(a, exec)?,
        Command::Dispersive(a) => commands::dispersive(a, exec)?,
        Command::Scan(a) => commands::scan(a, exec)?,
        Command::FieldProfile(a) => commands::field_profile(a, exec)?,
        Command::Classify(a) => commands::classify(a)?,
    };
    let hash = config_hash(command)?;
    let name = serde_json::to_value(command)?
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    for t in &mut report.tables {
        let mut meta = vec![
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("command".to_string(), name.clone()),
            ("config_hash".to_string(), hash.clone()),
        ];
        meta.append(&mut t.meta);
        t.meta = meta;
    }
    Ok(report)
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let threads = resolve_threads(cli.threads)?;
    let exec = if threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let report = with_threads(threads, || execute(&cli.command, exec))?;
    match &cli.out_dir {
        Some(dir) => {
            for t in &report.tables {
                t.write(dir, cli.format)?;
            }
        }
        None => {
            for t in &report.tables {
                print!("{}", t.render(cli.format)?);
            }
        }
    }
    Ok(report)
}
