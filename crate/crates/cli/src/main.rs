use std::path::PathBuf;
use std::process::ExitCode;

use adol_cli::{run, Command, Options};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adol", version, about = "ADOL rough-volatility model: constants, figures, pricing and checks")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Process constants over an H grid
    Constants(Common),
    /// Data of figures 1 to 6
    Figures(Common),
    /// Characteristic function on a frequency grid
    Cf(Common),
    /// Option prices for a strike ladder
    Price(Common),
    /// Variance-swap fair strike
    Varswap(Common),
    /// Monte Carlo diagnostics
    Mc(Common),
    /// Discrepancy ledger as JSON
    Ledger(Common),
    /// Every command with its oracle tolerances enforced
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding output.directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random stream, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 3 when any oracle tolerance is breached
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, common) = match cli.command {
        Sub::Constants(c) => (Command::Constants, c),
        Sub::Figures(c) => (Command::Figures, c),
        Sub::Cf(c) => (Command::Cf, c),
        Sub::Price(c) => (Command::Price, c),
        Sub::Varswap(c) => (Command::Varswap, c),
        Sub::Mc(c) => (Command::Mc, c),
        Sub::Ledger(c) => (Command::Ledger, c),
        Sub::Check(c) => (Command::Check, c),
    };
    let opts = Options {
        config: common.config,
        out: common.out,
        seed: common.seed,
        check: common.check || command == Command::Check,
    };
    match run(command, &opts) {
        Ok(report) => {
            for path in &report.written {
                eprintln!("wrote {}", path.display());
            }
            for c in &report.checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                eprintln!("{status} {}.{}: {}", c.command, c.name, c.detail);
            }
            if opts.check && report.breaches().next().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("adol {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
