mod config;
mod sweeps;
mod table;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, Settings};

/// Quantum-battery charging sweeps. Tables go to --out (or stdout) as CSV;
/// summaries go to stderr.
#[derive(Debug, Parser)]
#[command(name = "qbattery", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ergotropy, daemonic extremes, gap and band along a time grid
    TimeSweep,
    /// Optimal cycle and daemonic gap of thermal batteries against beta
    BetaSweep,
    /// Repeated charging cycles until the battery is full
    RepeatCharge,
    /// Two-mode battery with a superposed three-level charger
    DoubleMode,
    /// Daemonic advantage over ground population and measurement angle
    Landscape,
    /// Check the simulation against the closed forms
    Verify,
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    if let Command::Verify = cli.command {
        let mut ok = true;
        for c in qbattery::verify::run_all() {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            ok &= c.passed;
        }
        return Ok(ok);
    }
    let s = Settings::resolve(&cli.flags)?;
    let table = match cli.command {
        Command::TimeSweep => sweeps::time_sweep(&s)?,
        Command::BetaSweep => sweeps::beta_sweep(&s)?,
        Command::RepeatCharge => sweeps::repeat_charge(&s)?,
        Command::DoubleMode => sweeps::double_mode(&s)?,
        Command::Landscape => sweeps::landscape(&s)?,
        Command::Verify => unreachable!(),
    };
    table.save(s.out.as_deref())?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
