//! `concomp`: runs the library's experiments and writes JSON and CSV reports.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "concomp", version, about = "Privacy experiments for concurrent composition of interactive mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "CONCOMP_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Replace every noise draw with 0.
    #[arg(long, global = true)]
    zero_noise: bool,
    /// Report path; the CSV goes next to it. Prints the report when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parallel composition counterexample: exact exposure mass and the distinguishing game.
    Counterexample {
        /// Number of mechanisms the adversary may create.
        #[arg(long)]
        ell: Option<usize>,
    },
    /// Worst adaptive template against concurrently composed randomized response.
    Composition,
    /// Histogram mechanism outputs against the zero-noise reference.
    Histogram {
        #[arg(long)]
        streams: Option<usize>,
    },
    /// Reduction tables, conditions and the IRR post-processor.
    Reduction {
        /// Only this instance (rr, m_delta, random_table, constant_table).
        #[arg(long)]
        instance: Option<String>,
    },
    /// Destination, response and verification-mapping checks on neighboring streams.
    Structural {
        #[arg(long)]
        streams: Option<usize>,
    },
    /// Exact view distributions of a small mechanism under both secrets.
    Enumerate {
        /// rr, irr or m_delta.
        #[arg(long)]
        mechanism: Option<String>,
    },
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut cfg = ExperimentConfig::default();
            if matches!(cli.command, Command::Structural { .. }) {
                cfg.streams = 200;
                cfg.d = 4;
            }
            cfg
        }
    };
    let c = &cli.common;
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    cfg.trials = c.trials.unwrap_or(cfg.trials);
    cfg.epsilon = c.epsilon.or(cfg.epsilon);
    cfg.delta = c.delta.or(cfg.delta);
    cfg.horizon = c.horizon.or(cfg.horizon);
    cfg.zero_noise |= c.zero_noise;
    match &cli.command {
        Command::Counterexample { ell } => cfg.ell = ell.unwrap_or(cfg.ell),
        Command::Histogram { streams } | Command::Structural { streams } => cfg.streams = streams.unwrap_or(cfg.streams),
        Command::Reduction { instance: m } | Command::Enumerate { mechanism: m } => cfg.mechanism = m.clone().or(cfg.mechanism.take()),
        Command::Composition => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve(cli)?;
    let (report, table) = match cli.command {
        Command::Counterexample { .. } => commands::counterexample(&cfg)?,
        Command::Composition => commands::composition(&cfg)?,
        Command::Histogram { .. } => commands::histogram(&cfg)?,
        Command::Reduction { .. } => commands::reduction(&cfg)?,
        Command::Structural { .. } => commands::structural(&cfg)?,
        Command::Enumerate { .. } => commands::enumerate(&cfg)?,
    };
    report::emit(&report, &table, cli.common.out.as_deref())?;
    eprintln!("{}: {}", report.command, if report.passed { "PASS" } else { "FAIL" });
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
