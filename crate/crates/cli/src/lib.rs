//! Command-line front end of the ADOL model library.

pub mod commands;
pub mod config;
pub mod ledger;
pub mod output;

use std::fmt;
use std::path::PathBuf;

use adol_core::Error;

pub use config::RunConfig;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::Domain(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

/// Outcome of one oracle tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub command: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(command: &'static str, name: &str, passed: bool, detail: String) -> Self {
        Self { command, name: name.to_string(), passed, detail }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Constants,
    Figures,
    Cf,
    Price,
    Varswap,
    Mc,
    Ledger,
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Figures => "figures",
            Command::Cf => "cf",
            Command::Price => "price",
            Command::Varswap => "varswap",
            Command::Mc => "mc",
            Command::Ledger => "ledger",
            Command::Check => "check",
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub check: bool,
}

/// Result of a run: files written and tolerance checks evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn breaches(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Load the configuration, run `command` and write its outputs.
pub fn run(command: Command, opts: &Options) -> Result<RunReport, CliError> {
    let cfg = RunConfig::load(&opts.config)?.with_seed(opts.seed);
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let mut w = output::Writer::new(&dir, command.name(), cfg.mc.seed)?;
    w.json("resolved_config.json", &cfg)?;
    let checks = commands::dispatch(command, &cfg, &mut w)?;
    Ok(RunReport { written: w.written, checks })
}
