//! `dgkd`: batch driver for the multi-source generalization experiments.

mod artifacts;
mod commands;
mod config;
mod jobs;
mod layout;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use dgkd_core::toy::ToyCorpusConfig;
use dgkd_core::trainers::Method;

use crate::commands::{data, evaluate, teacher, train};
use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "dgkd", version, about = "Knowledge distillation and domain-invariant learning for multi-source reading comprehension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and the data files it references.
    Validate(ConfigArg),
    /// Fit the tokenizer, build window caches and the leave-one-out plan.
    Prepare(ConfigArg),
    /// Train one teacher per combination (or the per-source companion models).
    TrainTeacher {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        combo: Option<String>,
        /// Train the single-source models used by episodic training instead.
        #[arg(long)]
        companions: bool,
    },
    /// Cache teacher logits on gold and synthetic training windows.
    CacheLogits {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        combo: Option<String>,
    },
    /// Generate synthetic questions over each source's training passages.
    Generate(ConfigArg),
    /// Train a method. Without --combo or --seed, runs every combination
    /// and configured seed as separate processes.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        combo: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Grid point index; defaults to the sweep's selection.
        #[arg(long)]
        point: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Train the hyperparameter grid and select per combination on dev.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        method: Method,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Predict and score every trained model on the target test sets.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        allow_partial: bool,
    },
    /// Pairwise coverage of gains over the baseline, as CSV.
    Coverage {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        allow_partial: bool,
    },
    /// Markdown tables from the score dumps.
    Report {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        allow_partial: bool,
    },
    /// Write the synthetic toy corpus as MRQA files.
    ToyData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        train_per_domain: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print an annotated example configuration.
    ExampleConfig,
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(c) => {
            let cfg = load(&c.config)?;
            let points: usize = Method::ALL.iter().map(|m| cfg.grid_points(*m).len()).sum();
            println!(
                "ok: {} sources, {} targets, {} seeds, {points} grid points over all methods",
                cfg.sources.len(),
                cfg.targets.len(),
                cfg.seeds.len()
            );
        }
        Command::Prepare(c) => {
            let n = data::cmd_prepare(&load(&c.config)?)?;
            println!("prepare: {} file(s) written, {} unchanged", n.written, n.unchanged);
        }
        Command::TrainTeacher { config, combo, companions } => {
            let cfg = load(&config.config)?;
            if companions {
                teacher::cmd_train_companions(&cfg)?;
            } else {
                teacher::cmd_train_teacher(&cfg, combo.as_deref())?;
            }
        }
        Command::CacheLogits { config, combo } => teacher::cmd_cache_logits(&load(&config.config)?, combo.as_deref())?,
        Command::Generate(c) => {
            let n = data::cmd_generate(&load(&c.config)?)?;
            println!("generate: {} window cache(s) written, {} unchanged", n.written, n.unchanged);
        }
        Command::Train {
            config,
            method,
            combo,
            seed,
            point,
            jobs,
        } => {
            let cfg = load(&config.config)?;
            match (combo, seed) {
                (Some(c), Some(s)) => {
                    let r = train::cmd_train(&cfg, method, &c, s, point)?;
                    println!("{} {} seed {}: checkpoint {}", r.method, r.combo, r.seed, r.checkpoint_hash);
                }
                (c, s) => train::fan_out_train(&cfg, &config.config, method, c.as_deref(), s, point, jobs.unwrap_or(cfg.jobs))?,
            }
        }
        Command::Sweep { config, method, jobs } => {
            let cfg = load(&config.config)?;
            let m = train::cmd_sweep(&cfg, &config.config, method, jobs.unwrap_or(cfg.jobs))?;
            print!("{}", train::sweep_table(&m));
        }
        Command::Evaluate {
            config,
            method,
            allow_partial,
        } => {
            let n = evaluate::cmd_evaluate(&load(&config.config)?, method, allow_partial)?;
            println!("evaluate: {n} model(s) scored");
        }
        Command::Coverage { config, allow_partial } => {
            let r = evaluate::cmd_coverage(&load(&config.config)?, allow_partial)?;
            print!("{}", dgkd_core::eval::report::coverage_csv(&r));
        }
        Command::Report { config, allow_partial } => print!("{}", evaluate::cmd_report(&load(&config.config)?, allow_partial)?),
        Command::ToyData {
            out,
            train_per_domain,
            seed,
        } => {
            let toy = ToyCorpusConfig {
                train_per_domain,
                seed,
                ..ToyCorpusConfig::default()
            };
            for p in data::cmd_toy_data(&out, &toy)? {
                println!("{}", p.display());
            }
        }
        Command::ExampleConfig => print!("{}", ExperimentConfig::example_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
