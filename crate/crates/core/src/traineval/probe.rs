use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{mean_row_cross_entropy, AdamWConfig, ModelParams, OptimizerState};
use crate::rng::indexed_substream;
use crate::synthdata::Dataset;

use super::model::encode_all;
use super::retrieval::argmax;

/// What the probe predicts: the full binary vector of one modality (as a
/// class index), or a single coordinate of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTarget {
    pub modality: usize,
    pub coordinate: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.01,
            batch_size: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub num_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// The training labels take a single value; no classifier was fitted.
    pub degenerate: bool,
}

fn labels(d: &Dataset, target: ProbeTarget) -> Result<Vec<usize>> {
    if target.modality >= d.num_modalities() {
        return Err(Error::InvalidArgument(format!("no modality {}", target.modality)));
    }
    if let Some(j) = target.coordinate {
        if j >= d.dims(target.modality) {
            return Err(Error::InvalidArgument(format!(
                "modality {} has no coordinate {j}",
                target.modality
            )));
        }
    }
    Ok((0..d.len())
        .map(|i| match target.coordinate {
            Some(j) => usize::from(d.modality(target.modality)[[i, j]] != 0.0),
            None => d.class_index(target.modality, i),
        })
        .collect())
}

/// Element-wise product of the representations of every modality except the target.
fn features(params: &ModelParams, d: &Dataset, target: usize) -> Result<Array2<f64>> {
    let reps = encode_all(params, d)?;
    let mut prod: Option<Array2<f64>> = None;
    for m in (0..reps.num_modalities()).filter(|&m| m != target) {
        prod = Some(match prod {
            None => reps.get(m).clone(),
            Some(p) => p * reps.get(m),
        });
    }
    prod.ok_or_else(|| Error::InvalidArgument("probe needs at least two modalities".into()))
}

fn predict(w: &Array2<f64>, b: &Array1<f64>, x: &Array2<f64>) -> Vec<usize> {
    let logits = x.dot(&w.t()) + b;
    logits.rows().into_iter().map(|r| argmax(r.as_slice().expect("contiguous"))).collect()
}

fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
    pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64
}

/// Fits a softmax regression on the frozen features `⊙_{m ≠ target} r_m` of
/// `train` and reports its accuracy on `test`. Features are standardized with
/// the training mean and deviation.
pub fn sufficient_statistic_probe(
    params: &ModelParams,
    train: &Dataset,
    test: &Dataset,
    target: ProbeTarget,
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::InvalidArgument("probe needs nonempty train and test data".into()));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument("probe epochs, batch size and lr must be positive".into()));
    }
    let y_train = labels(train, target)?;
    let y_test = labels(test, target)?;
    let num_classes = match target.coordinate {
        Some(_) => 2,
        None => 1 << train.dims(target.modality),
    };
    let first = y_train[0];
    if y_train.iter().all(|&y| y == first) {
        let pred = vec![first; y_test.len()];
        return Ok(ProbeReport {
            accuracy: accuracy(&pred, &y_test),
            train_accuracy: 1.0,
            num_classes,
            n_train: y_train.len(),
            n_test: y_test.len(),
            degenerate: true,
        });
    }

    let mut x_train = features(params, train, target.modality)?;
    let mut x_test = features(params, test, target.modality)?;
    let mean = x_train.mean_axis(Axis(0)).expect("nonempty");
    let std = x_train.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
    for x in [&mut x_train, &mut x_test] {
        *x -= &mean;
        *x /= &std;
    }

    let d = x_train.ncols();
    let mut w = Array2::<f64>::zeros((num_classes, d));
    let mut b = Array1::<f64>::zeros(num_classes);
    let mut opt = OptimizerState::new(
        AdamWConfig {
            lr: cfg.lr,
            weight_decay: 0.0,
            ..AdamWConfig::default()
        },
        &[w.len(), b.len()],
    );
    let mut order: Vec<usize> = (0..x_train.nrows()).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut indexed_substream(cfg.seed, "probe-shuffle", epoch as u64));
        for idx in order.chunks(cfg.batch_size) {
            let xb = x_train.select(Axis(0), idx);
            let yb: Vec<usize> = idx.iter().map(|&i| y_train[i]).collect();
            let logits = xb.dot(&w.t()) + &b;
            let (_, g) = mean_row_cross_entropy(&logits, &yb)?;
            let dw = g.t().dot(&xb);
            let db = g.sum_axis(Axis(0));
            opt.step(
                &mut [
                    w.as_slice_mut().expect("contiguous"),
                    b.as_slice_mut().expect("contiguous"),
                ],
                &[dw.as_slice().expect("contiguous"), db.as_slice().expect("contiguous")],
                &[false, false],
            )?;
        }
    }
    Ok(ProbeReport {
        accuracy: accuracy(&predict(&w, &b, &x_test), &y_test),
        train_accuracy: accuracy(&predict(&w, &b, &x_train), &y_train),
        num_classes,
        n_train: y_train.len(),
        n_test: y_test.len(),
        degenerate: false,
    })
}
