use std::path::PathBuf;

use clap::Args;
use log::{info, warn};
use symile_core::fmt::fmt_f64;
use symile_core::traineval::{bootstrap_accuracy, classify_target, BootstrapReport, ScorerKind};

use super::{load_checkpoint, load_dataset, modality_index, opt_f64, select_split, SplitChoice};
use crate::error::{CliError, CliResult};
use crate::files::{write_csv, Provenance};
use crate::runconfig::resolve_seed;

pub const RESULTS_HEADER: &str = "p_hat,objective,strategy,seed,mean_acc,se,n_test,checkpoint_path";
pub const BOOTSTRAP_HEADER: &str = "resample,accuracy";

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Rows of the dataset file to evaluate on, cut with the checkpoint's split.
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitChoice,
    /// symile or clip; defaults to the checkpoint's training objective.
    #[arg(long)]
    pub scorer: Option<ScorerKind>,
    /// Modality to predict.
    #[arg(long, default_value = "b")]
    pub target: String,
    #[arg(long, default_value_t = 10)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn results_row(
    p_hat: Option<f64>,
    objective: &str,
    strategy: &str,
    seed: u64,
    (mean_acc, se, n_test): (f64, f64, usize),
    checkpoint: &str,
) -> String {
    format!(
        "{},{objective},{strategy},{seed},{},{},{n_test},{checkpoint}",
        opt_f64(p_hat),
        fmt_f64(mean_acc),
        fmt_f64(se),
    )
}

pub fn bootstrap_rows(report: &BootstrapReport) -> Vec<String> {
    report
        .resamples
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{i},{}", fmt_f64(*a)))
        .collect()
}

pub fn run(a: EvalArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    if a.bootstrap == 0 {
        return Err(CliError::Usage("--bootstrap must be at least 1".into()));
    }
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let (header, data) = load_dataset(&a.data)?;
    let data = select_split(data, ckpt.config.split, a.split, &a.data)?;
    let complete = data.complete_rows();
    let data = if complete.len() < data.len() {
        warn!("evaluating on {} complete rows of {}", complete.len(), data.len());
        data.select(&complete)
    } else {
        data
    };
    let target = modality_index(&data, &a.target)?;
    let kind = a.scorer.unwrap_or_else(|| ckpt.config.objective.into());
    let result = classify_target(&ckpt.params, kind, &data, target)?;
    let report = bootstrap_accuracy(&result.correct(), a.bootstrap, seed)?;
    info!("{kind} accuracy {:.4} over {} queries", result.accuracy(), result.len());

    let prov = Provenance::new("eval", Some(ckpt.config_hash.clone()), Some(seed))
        .with("scorer", kind.to_string())
        .with("target", &a.target);
    let row = results_row(
        header.p_hat,
        ckpt.config.objective.as_str(),
        &ckpt.config.strategy.to_string(),
        ckpt.seed,
        (report.mean_acc, report.se, report.n),
        &a.checkpoint.display().to_string(),
    );
    write_csv(&a.out_dir.join("results.csv"), &prov, RESULTS_HEADER, &[row])?;
    write_csv(&a.out_dir.join("bootstrap.csv"), &prov, BOOTSTRAP_HEADER, &bootstrap_rows(&report))?;
    println!("mean_acc {:.6} se {:.6} n_test {}", report.mean_acc, report.se, report.n);
    Ok(())
}
