use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::config_hash;
use crate::objectives::NegativeStrategy;
use crate::synthdata::SplitSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    Symile,
    /// Sum of two-modality CLIP losses over every modality pair.
    PairwiseClip,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Symile => "symile",
            Objective::PairwiseClip => "pairwise_clip",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symile" => Ok(Objective::Symile),
            "pairwise_clip" | "clip" => Ok(Objective::PairwiseClip),
            other => Err(Error::InvalidArgument(format!(
                "unknown objective `{other}` (expected symile or pairwise_clip)"
            ))),
        }
    }
}

/// Training hyperparameters. Defaults are the synthetic-experiment settings:
/// 100 epochs, batch 1000, lr 0.1, weight decay 0.01, `t = -0.3`, 16-dim
/// unit-norm representations, 10K/1K/5K splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub strategy: NegativeStrategy,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub t_init: f64,
    pub d_out: usize,
    pub normalize: bool,
    pub seed: u64,
    pub split: SplitSpec,
    pub missing_p: f64,
    /// Pairwise CLIP learns one temperature per modality pair instead of a
    /// shared one.
    pub per_pair_temperature: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            objective: Objective::Symile,
            strategy: NegativeStrategy::OnPermute,
            epochs: 100,
            batch_size: 1000,
            lr: 0.1,
            weight_decay: 0.01,
            t_init: -0.3,
            d_out: 16,
            normalize: true,
            seed: 0,
            split: SplitSpec::default(),
            missing_p: 0.0,
            per_pair_temperature: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "batch_size must be at least 2 for a contrastive loss, got {}",
                self.batch_size
            )));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("lr must be finite and nonnegative, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "weight_decay must be finite and nonnegative, got {}",
                self.weight_decay
            )));
        }
        if !self.t_init.is_finite() {
            return Err(Error::InvalidArgument("t_init must be finite".into()));
        }
        if self.d_out == 0 {
            return Err(Error::InvalidArgument("d_out must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.missing_p) {
            return Err(Error::InvalidArgument(format!(
                "missing_p must lie in [0, 1), got {}",
                self.missing_p
            )));
        }
        if self.per_pair_temperature && self.objective != Objective::PairwiseClip {
            return Err(Error::InvalidArgument(
                "per_pair_temperature applies to pairwise_clip only".into(),
            ));
        }
        self.split.validate()
    }

    /// FNV-1a hash of the canonical JSON form.
    pub fn hash(&self) -> String {
        config_hash(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.d_out), (100, 1000, 16));
        assert_eq!((c.lr, c.weight_decay, c.t_init), (0.1, 0.01, -0.3));
        assert_eq!(c.split, SplitSpec::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn partial_json_fills_defaults_and_rejects_unknown_keys() {
        let c: TrainConfig = serde_json::from_str(r#"{"epochs": 3, "objective": "pairwise_clip"}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.objective, Objective::PairwiseClip);
        assert_eq!(c.batch_size, 1000);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"epoch": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        let bad = TrainConfig {
            batch_size: 1,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            missing_p: 1.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            per_pair_temperature: true,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let ok = TrainConfig {
            per_pair_temperature: true,
            objective: Objective::PairwiseClip,
            ..TrainConfig::default()
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn hash_tracks_content() {
        let a = TrainConfig::default();
        let b = TrainConfig {
            seed: 1,
            ..TrainConfig::default()
        };
        assert_eq!(a.hash(), TrainConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn objective_names() {
        for o in [Objective::Symile, Objective::PairwiseClip] {
            assert_eq!(o.as_str().parse::<Objective>().unwrap(), o);
        }
        assert!("triangle".parse::<Objective>().is_err());
    }
}
