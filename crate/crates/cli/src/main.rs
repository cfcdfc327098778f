//! `bubblecycle`: reproducible data artifacts for the asset/bond price feedback model.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{ConfigError, ExponentKind, RunConfig};

#[derive(Parser)]
#[command(name = "bubblecycle", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory; CSV `t,x,z[,lambda]` plus an events sidecar
    Simulate(RunConfig),
    /// List trivial and nontrivial fixed points with eigenvalues and region
    FixedPoints(RunConfig),
    /// Label a (b, g) grid by region; CSV `b,g,region` plus critical lines
    RegionMap(RunConfig),
    /// Fixed points along a one-parameter sweep, with merge points
    Bifurcation(RunConfig),
    /// Per-bubble amplitude, width and lag, plus window statistics
    Bubbles(RunConfig),
    /// Estimate the period (nu) or amplitude (gamma) exponent
    Exponents {
        #[arg(value_enum)]
        kind: Option<ExponentKind>,
        #[command(flatten)]
        cfg: RunConfig,
    },
    /// Fit the super-exponential approximant to the rise of one bubble
    Fit(RunConfig),
    /// Bubble count, amplitude and width over [0, 100] for the standard g list
    Table1(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Simulate(c) => ("simulate", c),
            Command::FixedPoints(c) => ("fixed-points", c),
            Command::RegionMap(c) => ("region-map", c),
            Command::Bifurcation(c) => ("bifurcation", c),
            Command::Bubbles(c) => ("bubbles", c),
            Command::Exponents { kind, mut cfg } => {
                cfg.exponent = kind;
                ("exponents", cfg)
            }
            Command::Fit(c) => ("fit", c),
            Command::Table1(c) => ("table1", c),
        }
    }
}

fn load(flags: RunConfig) -> Result<RunConfig> {
    let mut merged = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("reading config {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?.overlay(&flags)?
        }
        None => flags,
    };
    if merged.workers.is_none() {
        if let Ok(v) = std::env::var("BUBBLECYCLE_WORKERS") {
            let n = v.trim().parse().map_err(|_| ConfigError(format!("BUBBLECYCLE_WORKERS=`{v}` is not a count")))?;
            merged.workers = Some(n);
        }
    }
    Ok(merged)
}

fn run(cli: Cli) -> Result<()> {
    let (name, flags) = cli.command.split();
    let mut cfg = load(flags)?;
    let job = cfg.resolve(name)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let product = pool.install(|| commands::run(&job))?;
    for path in output::emit(&cfg, product)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use bubblecycle_core::Error as Core;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Core>() {
            return match e {
                Core::InvalidConfig(_) | Core::NonFinite(_) => 2,
                _ => 3,
            };
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            if e.is_io_error() {
                return 4;
            }
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
