use log::{debug, info};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{AdamWConfig, ModelParams, OptimizerState};
use crate::objectives::draw_negatives;
use crate::rng::{indexed_substream, substream};
use crate::synthdata::Dataset;

use super::config::TrainConfig;
use super::model::{batch_loss, loss_value};

/// Model parameters with the provenance of the epoch they were taken from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: ModelParams,
    /// 1-based epoch; 0 for an untrained model.
    pub epoch: usize,
    /// NaN for an untrained model, stored as null.
    #[serde(deserialize_with = "nan_from_null")]
    pub val_loss: f64,
    pub config_hash: String,
    pub seed: u64,
    pub config: TrainConfig,
}

fn nan_from_null<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Checkpoint {
    /// An untrained model with the configured initialization.
    pub fn untrained(cfg: &TrainConfig, input_dims: &[usize], missing_indicator: bool) -> Self {
        Self {
            params: init_params(cfg, input_dims, missing_indicator),
            epoch: 0,
            val_loss: f64::NAN,
            config_hash: cfg.hash(),
            seed: cfg.seed,
            config: cfg.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub temperature_log: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Lowest validation loss over all epochs (earliest on ties).
    pub best: Checkpoint,
    pub history: Vec<EpochRecord>,
    pub last: ModelParams,
}

pub fn init_params(cfg: &TrainConfig, input_dims: &[usize], missing_indicator: bool) -> ModelParams {
    let mut rng = substream(cfg.seed, "init");
    let params = ModelParams::init(input_dims, cfg.d_out, cfg.normalize, cfg.t_init, missing_indicator, &mut rng);
    if cfg.per_pair_temperature {
        params.with_pair_temperatures()
    } else {
        params
    }
}

fn batches(order: &[usize], batch_size: usize) -> impl Iterator<Item = &[usize]> {
    // A trailing batch of one sample has no negatives and is dropped.
    order.chunks(batch_size).filter(|c| c.len() >= 2)
}

/// Validation loss: in-order batches, negatives from a stream that is reset on
/// every call so epochs are compared on the same draws.
pub fn validation_loss(params: &ModelParams, val: &Dataset, cfg: &TrainConfig) -> Result<f64> {
    let order: Vec<usize> = (0..val.len()).collect();
    let mut rng = substream(cfg.seed, "val-negatives");
    let mut total = 0.0;
    let mut rows = 0usize;
    for idx in batches(&order, cfg.batch_size) {
        let batch = val.select(idx);
        let neg = draw_negatives(cfg.strategy, batch.num_modalities(), batch.len(), &mut rng);
        total += loss_value(params, &batch, cfg.objective, &neg)? * idx.len() as f64;
        rows += idx.len();
    }
    if rows == 0 {
        return Err(Error::InvalidArgument("validation split needs at least 2 samples".into()));
    }
    Ok(total / rows as f64)
}

fn diverged(epoch: usize, step: usize, e: Error) -> Error {
    match e {
        Error::NonFinite(d) | Error::DegenerateInput(d) => Error::Diverged {
            epoch,
            step,
            detail: d,
        },
        other => other,
    }
}

fn check_finite(params: &ModelParams, epoch: usize, step: usize) -> Result<()> {
    if !(params.scale() > 0.0) || !params.scale().is_finite() || params.flatten().iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged {
            epoch,
            step,
            detail: "parameters or temperature left the finite range".into(),
        });
    }
    Ok(())
}

/// Trains from the configured initialization and returns the
/// lowest-validation-loss checkpoint. Deterministic given `cfg`.
pub fn train(cfg: &TrainConfig, train: &Dataset, val: &Dataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.len() < 2 {
        return Err(Error::InvalidArgument("training split needs at least 2 samples".into()));
    }
    if train.num_modalities() != val.num_modalities()
        || (0..train.num_modalities()).any(|m| train.dims(m) != val.dims(m))
    {
        return Err(Error::ShapeMismatch("training and validation splits differ in shape".into()));
    }
    if cfg.strategy == crate::objectives::NegativeStrategy::OnSquared
        && cfg.objective == super::Objective::Symile
        && train.num_modalities() != 3
    {
        return Err(Error::InvalidArgument(
            "exhaustive (on2) negatives need exactly three modalities".into(),
        ));
    }
    let dims: Vec<usize> = (0..train.num_modalities()).map(|m| train.dims(m)).collect();
    let indicator = train.masks().is_some() || val.masks().is_some();
    let mut params = init_params(cfg, &dims, indicator);
    let lens: Vec<usize> = params.blocks().iter().map(|b| b.1).collect();
    let decay = params.decay_mask();
    let mut opt = OptimizerState::new(
        AdamWConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamWConfig::default()
        },
        &lens,
    );
    let hash = cfg.hash();
    info!(
        "training {} ({}) for {} epochs on {} samples, config {hash}",
        cfg.objective,
        cfg.strategy,
        cfg.epochs,
        train.len()
    );

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<Checkpoint> = None;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        let mut shuffle = indexed_substream(cfg.seed, "shuffle", epoch as u64);
        let mut neg_rng = indexed_substream(cfg.seed, "negatives", epoch as u64);
        order.sort_unstable();
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        let mut steps = 0usize;
        for (step, idx) in batches(&order, cfg.batch_size).enumerate() {
            check_finite(&params, epoch, step)?;
            let batch = train.select(idx);
            let neg = draw_negatives(cfg.strategy, batch.num_modalities(), batch.len(), &mut neg_rng);
            let out = batch_loss(&params, &batch, cfg.objective, &neg).map_err(|e| diverged(epoch, step, e))?;
            if !out.loss.is_finite() || !out.grads.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    detail: format!("loss {} or its gradient is not finite", out.loss),
                });
            }
            loss_sum += out.loss;
            steps += 1;
            opt.step(&mut params.param_slices_mut(), &out.grads.slices(), &decay)?;
        }
        check_finite(&params, epoch, steps)?;
        let val_loss = validation_loss(&params, val, cfg).map_err(|e| diverged(epoch, steps, e))?;
        if !val_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: steps,
                detail: format!("validation loss {val_loss}"),
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / steps.max(1) as f64,
            val_loss,
            temperature_log: params.temperature_log,
        };
        debug!(
            "epoch {epoch}: train {:.6} val {:.6} t {:.4}",
            record.train_loss, record.val_loss, record.temperature_log
        );
        history.push(record);
        if best.as_ref().is_none_or(|b| val_loss < b.val_loss) {
            best = Some(Checkpoint {
                params: params.clone(),
                epoch,
                val_loss,
                config_hash: hash.clone(),
                seed: cfg.seed,
                config: cfg.clone(),
            });
        }
    }
    let best = best.expect("at least one epoch");
    info!("best epoch {} with validation loss {:.6}", best.epoch, best.val_loss);
    Ok(TrainOutcome {
        best,
        history,
        last: params,
    })
}
