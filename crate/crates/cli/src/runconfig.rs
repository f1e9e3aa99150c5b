use std::fmt;
use std::str::FromStr;

use log::info;
use serde::{Deserialize, Serialize};
use symile_core::hash::config_hash;
use symile_core::oracle::IMode;
use symile_core::synthdata::{apply_missingness, gen_synth5d, gen_xor1d, split, Dataset};
use symile_core::TrainConfig;

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "SYMILE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Xor1d,
    #[default]
    Synth5d,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Xor1d => "xor1d",
            DatasetKind::Synth5d => "synth5d",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "xor1d" => Ok(DatasetKind::Xor1d),
            "synth5d" => Ok(DatasetKind::Synth5d),
            other => Err(format!("unknown dataset `{other}` (expected xor1d or synth5d)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    /// Mixture weight of the XOR branch; synth5d only.
    pub p_hat: f64,
    pub i_mode: IMode,
    /// Generation seed; the training seed when absent.
    pub seed: Option<u64>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::Synth5d,
            p_hat: 1.0,
            i_mode: IMode::Shared,
            seed: None,
        }
    }
}

/// Dataset parameters plus training hyperparameters for one run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub train: TrainConfig,
    /// Where `train` writes when `--out-dir` is not given. Not part of the hash.
    pub out_dir: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if !(0.0..=1.0).contains(&self.dataset.p_hat) {
            return Err(CliError::Usage(format!(
                "dataset.p_hat must lie in [0, 1], got {}",
                self.dataset.p_hat
            )));
        }
        self.train.validate().map_err(|e| CliError::Usage(format!("train: {e}")))
    }

    /// FNV-1a hash of the canonical JSON form, output location excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = None;
        config_hash(&c).expect("config serializes")
    }

    pub fn data_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(self.train.seed)
    }

    /// Applies `SYMILE_SEED` to the training seed, if set.
    pub fn apply_env_seed(&mut self) -> CliResult<()> {
        if let Some(seed) = env_seed()? {
            info!("{SEED_ENV}={seed} overrides config seed {}", self.train.seed);
            self.train.seed = seed;
        }
        Ok(())
    }

    /// Generates the full dataset (train + val + test samples), masks included.
    pub fn generate(&self) -> CliResult<Dataset> {
        let n = self.train.split.total();
        let seed = self.data_seed();
        let d = match self.dataset.kind {
            DatasetKind::Xor1d => gen_xor1d(n, seed)?,
            DatasetKind::Synth5d => gen_synth5d(n, self.dataset.p_hat, seed, self.dataset.i_mode)?,
        };
        Ok(if self.train.missing_p > 0.0 {
            apply_missingness(&d, self.train.missing_p, seed)?
        } else {
            d
        })
    }

    pub fn generate_splits(&self) -> CliResult<(Dataset, Dataset, Dataset)> {
        Ok(split(&self.generate()?, self.train.split)?)
    }
}

/// The `SYMILE_SEED` override, if set.
pub fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a nonnegative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// `seed`, or `SYMILE_SEED` when set (logged).
pub fn resolve_seed(seed: u64) -> CliResult<u64> {
    Ok(match env_seed()? {
        Some(s) => {
            info!("{SEED_ENV}={s} overrides seed {seed}");
            s
        }
        None => seed,
    })
}
