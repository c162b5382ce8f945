//! `ebc`: experiment runner for the static and evolving beta coalescent.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "ebc", version, about = "Simulate beta coalescent functionals and check their stable limits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    n: Option<String>,
    #[arg(long, global = true)]
    replicates: Option<String>,
    /// Functional: a preset or a sum of power terms such as `2*x^-0.3 - 1`
    #[arg(long, global = true)]
    functional: Option<String>,
    /// Comma-separated scaled times
    #[arg(long, global = true)]
    times: Option<String>,
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Kernel cutoff; `inf` for none
    #[arg(long, global = true)]
    rmax: Option<String>,
    /// Master seed; takes precedence over EBC_SEED
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Frequencies for `limit-cf`: `,` between coordinates, `;` between vectors
    #[arg(long, global = true, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Input CSV for `verify`
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Column of the input CSV to test
    #[arg(long, global = true)]
    column: Option<String>,
    /// Reference draws for `verify`
    #[arg(long, global = true)]
    reference: Option<String>,
    /// SVG of sample paths across scaled time
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// SVG quantile plot against the reference sample
    #[arg(long, global = true)]
    qq: Option<PathBuf>,
    /// Persist the event log of replicate 0 (`evolve-run`)
    #[arg(long, global = true)]
    save_log: Option<PathBuf>,
    /// Event log to replay
    #[arg(long, global = true)]
    log: Option<PathBuf>,
    /// smoke or acceptance
    #[arg(long, global = true)]
    suite: Option<String>,
    /// Comma-separated acceptance criterion ids
    #[arg(long, global = true)]
    criteria: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Merger rate table lambda_{b,k} for b up to n
    Rates,
    /// Static coalescent replicates, one CSV row each
    StaticRun,
    /// J_{n,s}(f) across scaled times from evolving populations
    EvolveRun,
    /// Draws of the limit process of J_{n,s}(f)
    LimitRun,
    /// Characteristic function of the limit process
    LimitCf,
    /// KS and empirical-CF tests of a CSV column against the stable limit
    Verify,
    /// Re-extract genealogies from a persisted event log
    Replay,
    /// Packaged smoke or acceptance suite
    Suite,
}

fn resolve(flags: &Flags) -> Result<ExperimentConfig, config::ConfigError> {
    let mut cfg = ExperimentConfig::defaults();
    if let Some(path) = &flags.config {
        cfg.merge_file(path)?;
    }
    if let Ok(seed) = std::env::var("EBC_SEED") {
        cfg.set("seed", &seed)?;
    }
    let text = [
        ("alpha", &flags.alpha),
        ("n", &flags.n),
        ("replicates", &flags.replicates),
        ("functional", &flags.functional),
        ("times", &flags.times),
        ("eps", &flags.eps),
        ("rmax", &flags.rmax),
        ("seed", &flags.seed),
        ("format", &flags.format),
        ("theta", &flags.theta),
        ("column", &flags.column),
        ("reference", &flags.reference),
        ("suite", &flags.suite),
        ("criteria", &flags.criteria),
    ];
    for (key, value) in text {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    let paths = [
        ("out", &flags.out),
        ("input", &flags.input),
        ("plot", &flags.plot),
        ("qq", &flags.qq),
        ("save-log", &flags.save_log),
        ("log", &flags.log),
    ];
    for (key, value) in paths {
        if let Some(p) = value {
            cfg.set(key, &p.to_string_lossy())?;
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli.flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Rates => commands::rates(&cfg),
        Command::StaticRun => commands::static_run(&cfg),
        Command::EvolveRun => commands::evolve_run(&cfg),
        Command::LimitRun => commands::limit_run(&cfg),
        Command::LimitCf => commands::limit_cf(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Replay => commands::replay(&cfg),
        Command::Suite => commands::suite(&cfg),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
