//! `cms`: batch diagnostics for countable Markov shifts.
//!
//! Exit codes: 0 success, 2 config error, 3 refused computation,
//! 4 invariant breach.

mod commands;
mod config;
mod error;
mod source;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Format, RunConfig, Settings, DEFAULT_HORIZON};
use error::CliError;
use source::Source;
use table::Report;

#[derive(Parser)]
#[command(name = "cms", version, about = "Pressure, recurrence and entropy-at-infinity diagnostics for countable Markov shifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full diagnostics: partition sums, pressure, chi_per, SPR, CRC and profiles.
    Report(RunArgs),
    /// Compare enumeration with the DP and closed-form paths.
    Oracle(RunArgs),
    /// List the named presets.
    Presets(OutputArgs),
    /// Partition sums and the pressure estimate.
    Pressure(RunArgs),
    /// Entropy and contraction at infinity on the (M, q) grid.
    Hinf(RunArgs),
    /// Strong positive recurrence check.
    Spr(RunArgs),
}

#[derive(Args, Clone, Default)]
struct OutputArgs {
    /// Directory for report files; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    /// Display logarithms in base 2.
    #[arg(long)]
    log2: bool,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Strict JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset (see `cms presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Shift spec JSON file.
    #[arg(long)]
    shift: Option<PathBuf>,
    /// Potential spec JSON file.
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Horizon N.
    #[arg(long)]
    horizon: Option<usize>,
    /// Keep only bouquet loops of length <= L.
    #[arg(long)]
    truncate: Option<usize>,
    /// M grid, comma separated.
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<u64>>,
    /// q grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<u64>>,
    /// Verdict tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

impl RunArgs {
    fn settings(&self, default_horizon: usize) -> Result<Settings, CliError> {
        let file = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            preset: self.preset.clone(),
            shift: self.shift.clone(),
            potential: self.potential.clone(),
            horizon: self.horizon,
            truncate: self.truncate,
            m: self.m.clone(),
            q: self.q.clone(),
            tol: self.tol,
            out: self.output.out.clone(),
            format: self.output.format.clone(),
            log2: self.output.log2.then_some(true),
        };
        Settings::resolve(file.merge(flags), default_horizon)
    }
}

/// Prints `report` or writes it under `settings.out`.
fn emit(report: &Report, settings: &Settings) -> Result<(), CliError> {
    let log2 = settings.log2;
    match &settings.out {
        None => {
            for f in &settings.formats {
                match f {
                    Format::Csv => print!("{}", report.csv(log2)),
                    Format::Json => print!("{}", report.json(log2)),
                }
            }
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for f in &settings.formats {
                match f {
                    Format::Csv => {
                        std::fs::write(dir.join("summary.csv"), report.summary_csv(log2))?;
                        for t in &report.tables {
                            std::fs::write(dir.join(format!("{}.csv", t.name)), t.csv(log2))?;
                        }
                    }
                    Format::Json => std::fs::write(dir.join("report.json"), report.json(log2))?,
                }
            }
        }
    }
    Ok(())
}

/// A command's report, plus a message when it found an invariant breach.
type Runner = fn(&Source, &Settings) -> Result<(Report, Option<String>), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (args, default_horizon, runner): (RunArgs, usize, Runner) = match cli.command {
        Command::Presets(out) => {
            let settings = Settings::resolve(
                RunConfig {
                    out: out.out,
                    format: out.format,
                    log2: Some(out.log2),
                    ..Default::default()
                },
                DEFAULT_HORIZON,
            )?;
            return emit(&commands::presets(), &settings);
        }
        Command::Report(a) => (a, DEFAULT_HORIZON, |src, s| commands::report(src, s).map(|r| (r, None))),
        Command::Oracle(a) => (a, 12, commands::oracle),
        Command::Pressure(a) => (a, DEFAULT_HORIZON, |src, s| commands::pressure(src, s).map(|r| (r, None))),
        Command::Hinf(a) => (a, 30, |src, s| commands::hinf(src, s).map(|r| (r, None))),
        Command::Spr(a) => (a, DEFAULT_HORIZON, |src, s| commands::spr(src, s).map(|r| (r, None))),
    };
    let settings = args.settings(default_horizon)?;
    let src = Source::load(&settings)?;
    let (report, breach) = runner(&src, &settings)?;
    emit(&report, &settings)?;
    match breach {
        Some(msg) => Err(CliError::Breach(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("cms: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(_) => ExitCode::from(4),
    }
}
