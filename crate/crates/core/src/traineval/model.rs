use crate::error::{Error, Result};
use crate::numcore::{EncodeCache, ModelGrads, ModelParams};
use crate::objectives::{
    pairwise_clip_loss, pairwise_clip_loss_scaled, symile_loss_given, LossOutput, Negatives, RepresentationSet,
};
use crate::synthdata::Dataset;

use super::config::Objective;

/// Loss and parameter gradients for one batch.
#[derive(Debug, Clone)]
pub struct BatchLoss {
    pub loss: f64,
    pub per_term: Vec<f64>,
    pub grads: ModelGrads,
}

/// Per-modality observed flags, if the dataset carries masks.
pub(crate) fn observed_column(d: &Dataset, m: usize) -> Option<Vec<bool>> {
    d.masks().map(|mk| mk.column(m).to_vec())
}

fn check_compatible(params: &ModelParams, d: &Dataset) -> Result<()> {
    if params.num_modalities() != d.num_modalities() {
        return Err(Error::ShapeMismatch(format!(
            "model has {} encoders, data has {} modalities",
            params.num_modalities(),
            d.num_modalities()
        )));
    }
    Ok(())
}

fn forward(params: &ModelParams, d: &Dataset) -> Result<(Vec<EncodeCache>, RepresentationSet)> {
    check_compatible(params, d)?;
    let mut caches = Vec::with_capacity(d.num_modalities());
    for m in 0..d.num_modalities() {
        let obs = observed_column(d, m);
        let input = params.encoder_input(m, d.modality(m).view(), obs.as_deref())?;
        caches.push(params.encoders[m].forward_cached(input)?);
    }
    let reps = RepresentationSet::new(caches.iter().map(|c| c.output.clone()).collect())?;
    Ok((caches, reps))
}

/// Representations of every modality of `d`.
pub fn encode_all(params: &ModelParams, d: &Dataset) -> Result<RepresentationSet> {
    Ok(forward(params, d)?.1)
}

/// Loss value only.
pub fn loss_value(params: &ModelParams, d: &Dataset, objective: Objective, negatives: &Negatives) -> Result<f64> {
    let reps = encode_all(params, d)?;
    Ok(objective_loss(&reps, params, objective, negatives)?.0.loss)
}

/// The loss and, for per-pair CLIP temperatures, `dL/d(scale_k)` per pair.
fn objective_loss(
    reps: &RepresentationSet,
    params: &ModelParams,
    objective: Objective,
    negatives: &Negatives,
) -> Result<(LossOutput, Option<Vec<f64>>)> {
    match (objective, params.pair_scales()) {
        (Objective::Symile, _) => Ok((symile_loss_given(reps, params.scale(), negatives)?, None)),
        (Objective::PairwiseClip, None) => Ok((pairwise_clip_loss(reps, params.scale())?, None)),
        (Objective::PairwiseClip, Some(scales)) => {
            let (out, grads) = pairwise_clip_loss_scaled(reps, &scales)?;
            Ok((out, Some(grads)))
        }
    }
}

/// Loss of the batch `d` and its gradient with respect to every encoder
/// parameter and the log-temperature. `negatives` is ignored by CLIP.
pub fn batch_loss(params: &ModelParams, d: &Dataset, objective: Objective, negatives: &Negatives) -> Result<BatchLoss> {
    let (caches, reps) = forward(params, d)?;
    let (out, pair_scale_grads) = objective_loss(&reps, params, objective, negatives)?;
    let mut grads = ModelGrads::zeros_like(params);
    for (m, cache) in caches.iter().enumerate() {
        let (dw, db) = params.encoders[m].backward(cache, &out.rep_grads[m]);
        grads.weights[m] = dw;
        grads.biases[m] = db;
    }
    // scale = exp(t)
    match (pair_scale_grads, params.pair_scales()) {
        (Some(g), Some(scales)) => {
            grads.pair_temperature_logs = g.iter().zip(&scales).map(|(g, s)| g * s).collect();
        }
        _ => grads.temperature_log = out.scale_grad * params.scale(),
    }
    Ok(BatchLoss {
        loss: out.loss,
        per_term: out.per_term,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::finite_diff_grad;
    use crate::objectives::{draw_negatives, NegativeStrategy};
    use crate::rng::substream;
    use crate::synthdata::{apply_missingness, gen_synth};
    use crate::oracle::IMode;

    #[test]
    fn gradients_through_encoders() {
        let d = gen_synth(5, 2, 0.5, 3, IMode::Shared).unwrap();
        let d = apply_missingness(&d, 0.3, 4).unwrap();
        for (objective, strategy) in [
            (Objective::Symile, NegativeStrategy::OnPermute),
            (Objective::Symile, NegativeStrategy::OnSquared),
            (Objective::PairwiseClip, NegativeStrategy::OnPermute),
        ] {
            let mut rng = substream(9, "init");
            let params = ModelParams::init(&[2, 2, 2], 3, true, 0.2, true, &mut rng);
            let neg = draw_negatives(strategy, 3, d.len(), &mut rng);
            let out = batch_loss(&params, &d, objective, &neg).unwrap();
            let flat = params.flatten();
            let mut probe = params.clone();
            let numeric = finite_diff_grad(
                |theta| {
                    probe.unflatten(theta).unwrap();
                    loss_value(&probe, &d, objective, &neg).unwrap()
                },
                &flat,
                1e-5,
            )
            .unwrap();
            for (a, n) in out.grads.flatten().iter().zip(&numeric) {
                assert!((a - n).abs() < 1e-7, "{objective}: {a} vs {n}");
            }
        }
    }

    #[test]
    fn per_pair_temperature_gradients() {
        let d = gen_synth(6, 2, 0.5, 3, IMode::Shared).unwrap();
        let mut rng = substream(9, "init");
        let mut params = ModelParams::init(&[2, 2, 2], 3, true, 0.2, false, &mut rng).with_pair_temperatures();
        params.pair_temperature_logs = vec![-0.5, 0.1, 0.9];
        let out = batch_loss(&params, &d, Objective::PairwiseClip, &Negatives::Exhaustive).unwrap();
        assert_eq!(out.grads.temperature_log, 0.0);
        assert_eq!(params.blocks().last().unwrap(), &("t_pairs".to_string(), 3));
        let mut probe = params.clone();
        let numeric = finite_diff_grad(
            |theta| {
                probe.unflatten(theta).unwrap();
                loss_value(&probe, &d, Objective::PairwiseClip, &Negatives::Exhaustive).unwrap()
            },
            &params.flatten(),
            1e-5,
        )
        .unwrap();
        for (a, n) in out.grads.flatten().iter().zip(&numeric) {
            assert!((a - n).abs() < 1e-7, "{a} vs {n}");
        }
        // Equal pair temperatures reproduce the shared model.
        let shared = ModelParams::init(&[2, 2, 2], 3, true, 0.2, false, &mut substream(9, "init"));
        let split = shared.clone().with_pair_temperatures();
        let a = batch_loss(&shared, &d, Objective::PairwiseClip, &Negatives::Exhaustive).unwrap();
        let b = batch_loss(&split, &d, Objective::PairwiseClip, &Negatives::Exhaustive).unwrap();
        assert_eq!(a.loss, b.loss);
        let total: f64 = b.grads.pair_temperature_logs.iter().sum();
        assert!((total - a.grads.temperature_log).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_model() {
        let d = gen_synth(4, 1, 0.5, 3, IMode::Shared).unwrap();
        let mut rng = substream(9, "init");
        let params = ModelParams::init(&[1, 1], 3, true, 0.2, false, &mut rng);
        assert!(batch_loss(&params, &d, Objective::PairwiseClip, &Negatives::Exhaustive).is_err());
    }
}
