//! Command-line laboratory for quadratic-functional estimation in the
//! Gaussian sequence model.
//!
//! Commands: `estimate`, `risk`, `rates`, `check`, `simulate`. Experiments
//! are driven by a TOML config file plus a few overriding flags; every run
//! writes its resolved config next to its results and embeds the config
//! hash in every output, so results are reproducible from their own
//! provenance. Exit codes: 0 ok, 2 config error, 3 numeric error, 4 check
//! failure.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "qfest", version, about = "quadratic functional estimation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Override the RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the replication count.
    #[arg(long, global = true)]
    reps: Option<u64>,

    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format: csv, json or svg.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Clip reported estimates at zero (recorded in the report).
    #[arg(long, global = true)]
    clip: bool,

    /// Override the adaptive penalty multiplier.
    #[arg(long = "penalty-const", global = true)]
    penalty_const: Option<f64>,

    /// Output path stem; results land in <out>.csv/.json/.svg plus
    /// <out>.config.toml with the resolved config.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one estimator on an observation and print the full report.
    Estimate,
    /// Monte Carlo risk over a theta family, optionally across an n grid.
    Risk,
    /// Rate regime table, or a point query with --p/--alpha.
    Rates {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Run the numerical check suites.
    Check,
    /// Draw and store one observation.
    Simulate,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            print!("{text}");
        }
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, &cli);
    let cfg = cfg.resolved();

    let pool = {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = cli.threads {
            if t == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
            builder = builder.num_threads(t);
        }
        builder
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
    };

    pool.install(|| match &cli.command {
        Command::Estimate => commands::estimate::run(&cfg),
        Command::Risk => commands::risk::run(&cfg),
        Command::Rates { p, alpha } => {
            let point = match (p, alpha) {
                (Some(p), Some(a)) => Some((*p, *a)),
                (None, None) => None,
                _ => {
                    return Err(CliError::Config(
                        "point queries need both --p and --alpha".into(),
                    ))
                }
            };
            commands::rates::run(&cfg, point)
        }
        Command::Check => commands::check::run(&cfg),
        Command::Simulate => commands::simulate::run(&cfg),
    })
}

fn apply_overrides(cfg: &mut ExperimentConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        cfg.model.get_or_insert_with(Default::default).seed = Some(seed);
    }
    if let Some(reps) = cli.reps {
        cfg.experiment.get_or_insert_with(Default::default).reps = Some(reps);
    }
    if let Some(penalty) = cli.penalty_const {
        cfg.experiment.get_or_insert_with(Default::default).penalty = Some(penalty);
    }
    if cli.clip {
        cfg.experiment.get_or_insert_with(Default::default).clip = Some(true);
    }
    if let Some(format) = &cli.format {
        cfg.output.get_or_insert_with(Default::default).format = Some(format.clone());
    }
    if let Some(out) = &cli.out {
        cfg.output.get_or_insert_with(Default::default).out = Some(out.clone());
    }
}
