//! Command-line interface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dysplit::datagen::{InstanceFile, InstanceItem};
use dysplit::RngSeed;

use crate::config::{ExperimentConfig, Overrides, Task};
use crate::error::{CliError, Result};
use crate::experiment::run_experiment;
use crate::presets::PRESETS;
use crate::ratings::RatingsDataset;
use crate::table::{Cell, Format, ResultTable};

pub const INGEST_COLUMNS: &[&str] =
    &["lines", "users", "items", "ratings", "duplicates", "train", "test", "test_fraction", "seed"];

#[derive(Debug, Parser)]
#[command(name = "dysplit", version, about = "Three-operator splitting experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Named preset used as the base configuration.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    /// Base seed; trial i uses seed + i.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub trials: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_name = "csv|json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Low-rank matrix completion (synthetic or from a ratings file).
    Matcomp {
        #[command(flatten)]
        run: RunArgs,
        /// Ratings file for the matcomp_ratings task.
        #[arg(long, value_name = "PATH")]
        ratings: Option<PathBuf>,
    },
    /// Sparse recovery with DCT sensing matrices.
    Cs {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Read a ratings file, split it and report counts.
    Ingest {
        path: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_name = "csv|json")]
        format: Format,
        /// Write the train/test observations as an instance file.
        #[arg(long, value_name = "PATH")]
        save: Option<PathBuf>,
    },
    /// Step-size threshold and descent coefficient table.
    Diagnose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        lipschitz_f: Option<f64>,
        #[arg(long)]
        weak_convexity: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// List the built-in presets.
    Presets,
}

fn emit(table: &ResultTable, format: Format, out: Option<&Path>) -> Result<()> {
    let text = table.render(format)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Output(e.to_string())),
    }
}

fn load(run: &RunArgs, default_preset: &str, ratings: Option<PathBuf>) -> Result<ExperimentConfig> {
    let overrides = Overrides { seed: run.seed, trials: run.trials, out: run.out.clone(), ratings };
    ExperimentConfig::load(run.preset.as_deref(), run.config.as_deref(), Some(default_preset), &overrides)
}

fn execute_config(cfg: &ExperimentConfig, format: Format) -> Result<u8> {
    let report = run_experiment(cfg)?;
    emit(&report.table, format, cfg.out.as_deref())?;
    if report.exit_code() != 0 {
        log::warn!("{} of {} trials diverged, {} failed", report.diverged, report.trials, report.failed);
    }
    Ok(report.exit_code())
}

/// Runs a parsed command; the returned value is the process exit code.
pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Matcomp { run, ratings } => {
            let cfg = load(run, "table1-desk", ratings.clone())?;
            if !cfg.task.is_matcomp() {
                return Err(CliError::config(format!("task {} cannot run under `matcomp`", cfg.task)));
            }
            execute_config(&cfg, run.format)
        }
        Command::Cs { run } => {
            let cfg = load(run, "cs-noiseless-desk", None)?;
            if !cfg.task.is_cs() {
                return Err(CliError::config(format!("task {} cannot run under `cs`", cfg.task)));
            }
            execute_config(&cfg, run.format)
        }
        Command::Diagnose { run, lipschitz_f, weak_convexity, beta } => {
            let mut cfg = load(run, "gamma", None)?;
            if cfg.task != Task::Diagnose {
                return Err(CliError::config(format!("task {} cannot run under `diagnose`", cfg.task)));
            }
            let d = &mut cfg.diagnose;
            d.lipschitz_f = lipschitz_f.unwrap_or(d.lipschitz_f);
            d.weak_convexity = weak_convexity.unwrap_or(d.weak_convexity);
            d.beta = beta.unwrap_or(d.beta);
            execute_config(&cfg, run.format)
        }
        Command::Ingest { path, seed, test_fraction, out, format, save } => {
            let data = RatingsDataset::read(path)?;
            let split = data.split(*test_fraction, RngSeed(*seed))?;
            let mut t = ResultTable::new("ingest", INGEST_COLUMNS);
            t.push(vec![
                Cell::Int(data.lines as u64),
                Cell::Int(data.users.len() as u64),
                Cell::Int(data.items.len() as u64),
                Cell::Int(data.entries.len() as u64),
                Cell::Int(data.duplicates as u64),
                Cell::Int(split.train.len() as u64),
                Cell::Int(split.test.len() as u64),
                Cell::Float(*test_fraction),
                Cell::Int(*seed),
            ]);
            if let Some(dest) = save {
                let mut file = InstanceFile::default();
                file.comments.push(format!("ratings from {}", path.display()));
                file.comments.push(format!("split seed {seed}, test fraction {test_fraction}"));
                file.push("train", InstanceItem::Observations(split.train));
                file.push("test", InstanceItem::Observations(split.test));
                let f = std::fs::File::create(dest).map_err(|e| CliError::io(dest, e))?;
                file.write(std::io::BufWriter::new(f)).map_err(|e| CliError::io(dest, e))?;
            }
            emit(&t, *format, out.as_deref())?;
            Ok(0)
        }
        Command::Presets => {
            let mut stdout = std::io::stdout();
            for p in PRESETS {
                let tag = if p.long_running { " [long-running]" } else { "" };
                writeln!(stdout, "{:<18} {}{tag}", p.name, p.summary).map_err(|e| CliError::Output(e.to_string()))?;
            }
            Ok(0)
        }
    }
}
