use std::path::PathBuf;

use clap::Args;
use symile_core::fmt::fmt_f64;
use symile_core::traineval::{sufficient_statistic_probe, ProbeConfig, ProbeTarget};

use super::{load_checkpoint, load_dataset, modality_index, splits};
use crate::error::{CliError, CliResult};
use crate::files::{write_csv, Provenance};
use crate::runconfig::resolve_seed;

pub const PROBE_HEADER: &str = "target,coordinate,accuracy,train_accuracy,num_classes,n_train,n_test,degenerate";

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset file covering the checkpoint's train/val/test split; the probe
    /// fits on the train rows and scores the test rows.
    #[arg(long)]
    pub data: PathBuf,
    /// Modality whose value is predicted from the other modalities' product.
    #[arg(long, default_value = "b")]
    pub target: String,
    /// Predict one bit of the target (0-based) instead of the whole vector.
    #[arg(long)]
    pub coordinate: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: ProbeArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let (_, data) = load_dataset(&a.data)?;
    let (tr, _, te) = splits(&data, ckpt.config.split, &a.data)?;
    let modality = modality_index(&data, &a.target)?;
    if let Some(c) = a.coordinate {
        if c >= data.dims(modality) {
            return Err(CliError::Usage(format!(
                "--coordinate {c} out of range: `{}` has {} coordinates",
                a.target,
                data.dims(modality)
            )));
        }
    }
    let cfg = ProbeConfig {
        epochs: a.epochs,
        lr: a.lr,
        batch_size: a.batch_size,
        seed,
    };
    let target = ProbeTarget {
        modality,
        coordinate: a.coordinate,
    };
    let r = sufficient_statistic_probe(&ckpt.params, &tr, &te, target, &cfg)?;
    let row = format!(
        "{},{},{},{},{},{},{},{}",
        a.target,
        a.coordinate.map(|c| c.to_string()).unwrap_or_default(),
        fmt_f64(r.accuracy),
        fmt_f64(r.train_accuracy),
        r.num_classes,
        r.n_train,
        r.n_test,
        r.degenerate
    );
    let prov = Provenance::new("probe", Some(ckpt.config_hash.clone()), Some(seed));
    write_csv(&a.out, &prov, PROBE_HEADER, &[row])?;
    println!("probe accuracy {:.6} (train {:.6})", r.accuracy, r.train_accuracy);
    Ok(())
}
