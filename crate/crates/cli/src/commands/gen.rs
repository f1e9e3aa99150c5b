use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use symile_core::hash::config_hash;
use symile_core::oracle::IMode;
use symile_core::synthdata::{apply_missingness, gen_synth5d, gen_xor1d, write_dataset};

use super::unit_interval;
use crate::error::{CliError, CliResult};
use crate::files::{write_text, Provenance};
use crate::runconfig::{resolve_seed, DatasetKind};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// xor1d or synth5d
    #[arg(long)]
    pub dataset: DatasetKind,
    #[arg(long, default_value_t = 16_000)]
    pub n: usize,
    /// Mixture weight of the XOR branch (synth5d only).
    #[arg(long, value_parser = unit_interval)]
    pub p_hat: Option<f64>,
    /// shared or per_coordinate (synth5d only).
    #[arg(long, default_value = "shared")]
    pub i_mode: IMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Independent per-modality probability of masking a value.
    #[arg(long, default_value_t = 0.0, value_parser = unit_interval)]
    pub missing_p: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct GenParams {
    dataset: DatasetKind,
    n: usize,
    p_hat: Option<f64>,
    i_mode: Option<IMode>,
    seed: u64,
    missing_p: f64,
}

pub fn run(a: GenArgs) -> CliResult<()> {
    let seed = resolve_seed(a.seed)?;
    if a.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if a.missing_p >= 1.0 {
        return Err(CliError::Usage(format!("--missing-p must be below 1, got {}", a.missing_p)));
    }
    let (data, p_hat, i_mode) = match a.dataset {
        DatasetKind::Xor1d => {
            if a.p_hat.is_some() {
                return Err(CliError::Usage("--p-hat applies only to --dataset synth5d".into()));
            }
            (gen_xor1d(a.n, seed)?, None, None)
        }
        DatasetKind::Synth5d => {
            let p = a
                .p_hat
                .ok_or_else(|| CliError::Usage("--dataset synth5d requires --p-hat".into()))?;
            (gen_synth5d(a.n, p, seed, a.i_mode)?, Some(p), Some(a.i_mode))
        }
    };
    let data = if a.missing_p > 0.0 {
        apply_missingness(&data, a.missing_p, seed)?
    } else {
        data
    };
    let params = GenParams {
        dataset: a.dataset,
        n: a.n,
        p_hat,
        i_mode,
        seed,
        missing_p: a.missing_p,
    };
    let prov = Provenance::new("gen", Some(config_hash(&params)?), Some(seed));
    write_text(&a.out, |mut w| {
        write_dataset(&mut w, &data, Some(prov.to_value())).map_err(std::io::Error::other)
    })?;
    println!(
        "wrote {} samples of {} ({} modalities) to {}",
        data.len(),
        a.dataset,
        data.num_modalities(),
        a.out.display()
    );
    Ok(())
}
