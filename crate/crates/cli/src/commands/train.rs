use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use symile_core::fmt::fmt_f64;
use symile_core::traineval::{train, EpochRecord, TrainOutcome};
use symile_core::Dataset;

use super::{load_dataset, splits};
use crate::error::{CliError, CliResult};
use crate::files::{read_config, write_csv, write_json_doc, Provenance};
use crate::runconfig::RunConfig;

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Run config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset file to split; generated from the config when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides `out_dir` from the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,temperature_log";

pub fn history_rows(history: &[EpochRecord]) -> Vec<String> {
    history
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{}",
                r.epoch,
                fmt_f64(r.train_loss),
                fmt_f64(r.val_loss),
                fmt_f64(r.temperature_log)
            )
        })
        .collect()
}

/// Writes `checkpoint.json`, `history.csv` and `config.json` into `dir`.
pub fn write_run(dir: &Path, cfg: &RunConfig, outcome: &TrainOutcome) -> CliResult<()> {
    let prov = Provenance::new("train", Some(cfg.hash()), Some(cfg.train.seed));
    write_json_doc(&dir.join("config.json"), &prov, cfg)?;
    write_csv(&dir.join("history.csv"), &prov, HISTORY_HEADER, &history_rows(&outcome.history))?;
    write_json_doc(&dir.join("checkpoint.json"), &prov, &outcome.best)
}

pub fn train_splits(cfg: &RunConfig, train_set: &Dataset, val: &Dataset) -> CliResult<TrainOutcome> {
    train(&cfg.train, train_set, val).map_err(|e| match CliError::from(e) {
        CliError::Numerical(m) => CliError::Numerical(format!("training failed: {m}")),
        other => other,
    })
}

pub fn run(a: TrainArgs) -> CliResult<()> {
    let mut cfg: RunConfig = read_config(&a.config)?;
    cfg.apply_env_seed()?;
    cfg.validate()?;
    let out_dir = a
        .out_dir
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("no output directory: pass --out-dir or set out_dir".into()))?;

    let (tr, va, _) = match &a.data {
        Some(path) => {
            let (_, d) = load_dataset(path)?;
            splits(&d, cfg.train.split, path)?
        }
        None => cfg.generate_splits()?,
    };
    info!(
        "training {} ({}) on {} samples, validating on {}",
        cfg.train.objective,
        cfg.train.strategy,
        tr.len(),
        va.len()
    );
    let outcome = train_splits(&cfg, &tr, &va)?;
    write_run(&out_dir, &cfg, &outcome)?;
    println!(
        "best epoch {} val_loss {:.6} -> {}",
        outcome.best.epoch,
        outcome.best.val_loss,
        out_dir.join("checkpoint.json").display()
    );
    Ok(())
}
