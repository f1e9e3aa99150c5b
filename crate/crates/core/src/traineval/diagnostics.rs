use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{finite_diff_grad, GradCheckReport, ModelParams};
use crate::objectives::{draw_negatives, NegativeStrategy};
use crate::oracle::{bound_value, optimal_scorer_for, ContrastiveBatchSampler, Partition, TabularScorer};
use crate::rng::{indexed_substream, substream};
use crate::synthdata::{Dataset, DatasetMeta};

use super::config::Objective;
use super::model::{batch_loss, loss_value};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub batch_size: usize,
    pub steps: usize,
    pub lr: f64,
    /// Contrastive batches averaged into each gradient step.
    pub batches_per_step: usize,
    /// Monte-Carlo batches used to compare the bound before and after.
    pub eval_batches: usize,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            batch_size: 8,
            steps: 5000,
            lr: 0.1,
            batches_per_step: 32,
            eval_batches: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerRecovery {
    /// Average of the iterates over the second half of training.
    pub scorer: TabularScorer,
    /// `(state, g(state) - log ratio(state))` for every positive-mass state.
    pub offsets: Vec<(usize, f64)>,
    pub offset_mean: f64,
    pub offset_std: f64,
    pub bound_initial: f64,
    pub bound_final: f64,
    /// Combined standard error of the two bound estimates.
    pub bound_se: f64,
    /// False when the bound got worse by more than three standard errors.
    pub converged: bool,
}

/// Fits one free score per joint state by stochastic gradient ascent on the
/// contrastive bound, with batches drawn as one joint sample plus `N - 1`
/// anchor-sharing product-of-marginals samples. The anchor group rotates with
/// the step. Unsampled states keep their initial score.
pub fn recover_optimal_scorer(
    part: &Partition,
    cfg: &RecoveryConfig,
    init: Option<TabularScorer>,
) -> Result<ScorerRecovery> {
    let states = part.table().num_states();
    if cfg.batch_size < 2 || cfg.steps == 0 || cfg.batches_per_step == 0 || cfg.eval_batches == 0 {
        return Err(Error::InvalidArgument(
            "recovery needs batch size >= 2 and positive step, batch and evaluation counts".into(),
        ));
    }
    if !(cfg.lr > 0.0) || !cfg.lr.is_finite() {
        return Err(Error::InvalidArgument(format!("lr {} must be positive", cfg.lr)));
    }
    let mut g = init.unwrap_or_else(|| TabularScorer::constant(states, 0.0));
    if g.len() != states {
        return Err(Error::ShapeMismatch(format!("scorer has {} states, table has {states}", g.len())));
    }
    let samplers = (0..part.num_groups())
        .map(|a| ContrastiveBatchSampler::new(part, a))
        .collect::<Result<Vec<_>>>()?;
    let initial = g.clone();

    let mut rng = substream(cfg.seed, "scorer-recovery");
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut grad = vec![0.0; states];
    let mut weights = vec![0.0; cfg.batch_size];
    let mut avg = vec![0.0; states];
    let mut averaged = 0usize;
    for step in 0..cfg.steps {
        let sampler = &samplers[step % samplers.len()];
        grad.iter_mut().for_each(|v| *v = 0.0);
        for _ in 0..cfg.batches_per_step {
            sampler.sample(&mut rng, cfg.batch_size, &mut batch);
            let max = batch.iter().map(|&s| g.get(s)).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (w, &s) in weights.iter_mut().zip(&batch) {
                *w = (g.get(s) - max).exp();
                z += *w;
            }
            grad[batch[0]] += 1.0;
            for (w, &s) in weights.iter().zip(&batch) {
                grad[s] -= w / z;
            }
        }
        let step_size = cfg.lr / cfg.batches_per_step as f64;
        for (v, d) in g.scores_mut().iter_mut().zip(&grad) {
            *v += step_size * d;
        }
        if step >= cfg.steps / 2 {
            for (a, v) in avg.iter_mut().zip(g.scores()) {
                *a += v;
            }
            averaged += 1;
        }
    }
    let scorer = TabularScorer::new(avg.into_iter().map(|a| a / averaged as f64).collect());

    let probs = part.table().probs();
    let offsets: Vec<(usize, f64)> = (0..states)
        .filter(|&s| probs[s] > 0.0)
        .map(|s| (s, scorer.get(s) - part.log_ratio(s)))
        .collect();
    let k = offsets.len() as f64;
    let offset_mean = offsets.iter().map(|o| o.1).sum::<f64>() / k;
    let offset_std = (offsets.iter().map(|o| (o.1 - offset_mean).powi(2)).sum::<f64>() / k).sqrt();

    let eval_seed = cfg.seed ^ 0x5eed;
    let before = bound_value(part, &initial, 0, cfg.batch_size, cfg.eval_batches, eval_seed)?;
    let after = bound_value(part, &scorer, 0, cfg.batch_size, cfg.eval_batches, eval_seed)?;
    let bound_se = before.std_error.hypot(after.std_error);
    Ok(ScorerRecovery {
        scorer,
        offsets,
        offset_mean,
        offset_std,
        bound_initial: before.estimate,
        bound_final: after.estimate,
        bound_se,
        converged: after.estimate >= before.estimate - 3.0 * bound_se,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub batch_size: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub total_correlation: f64,
}

impl BoundRow {
    /// `estimate <= TC + 3 SE`
    pub fn within_bound(&self) -> bool {
        self.estimate <= self.total_correlation + 3.0 * self.std_error
    }
}

/// `Σ_s p(s) log ratio(s)`, the total correlation across the partition's groups.
pub fn partition_total_correlation(part: &Partition) -> f64 {
    part.table()
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| p * part.log_ratio(s))
        .sum()
}

/// The contrastive bound with the optimal scorer at each batch size, next to
/// the exact total correlation.
pub fn bound_tightness_report(part: &Partition, batch_sizes: &[usize], mc_samples: usize, seed: u64) -> Result<Vec<BoundRow>> {
    if batch_sizes.is_empty() {
        return Err(Error::InvalidArgument("no batch sizes given".into()));
    }
    let g = optimal_scorer_for(part);
    let tc = partition_total_correlation(part);
    batch_sizes
        .iter()
        .map(|&n| {
            let b = bound_value(part, &g, 0, n, mc_samples, seed)?;
            Ok(BoundRow {
                batch_size: n,
                estimate: b.estimate,
                std_error: b.std_error,
                total_correlation: tc,
            })
        })
        .collect()
}

/// One random setting exercised by [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradCheckCase {
    pub objective: Objective,
    pub strategy: NegativeStrategy,
    pub modalities: usize,
    pub normalize: bool,
}

impl GradCheckCase {
    pub fn label(&self) -> String {
        let loss = match (self.objective, self.modalities) {
            (Objective::PairwiseClip, 2) => "clip_pair".to_string(),
            (Objective::PairwiseClip, _) => "pairwise_clip".to_string(),
            (Objective::Symile, _) => format!("symile_{}", self.strategy),
        };
        format!(
            "{loss}/M={}/{}",
            self.modalities,
            if self.normalize { "norm" } else { "raw" }
        )
    }
}

const CASES: [(Objective, NegativeStrategy, usize); 5] = [
    (Objective::PairwiseClip, NegativeStrategy::OnPermute, 2),
    (Objective::PairwiseClip, NegativeStrategy::OnPermute, 3),
    (Objective::Symile, NegativeStrategy::OnPermute, 2),
    (Objective::Symile, NegativeStrategy::OnPermute, 3),
    (Objective::Symile, NegativeStrategy::OnSquared, 3),
];

/// The `index`-th case: cycles through the five losses, alternating
/// normalization every full cycle.
pub fn gradcheck_case(index: usize) -> GradCheckCase {
    let (objective, strategy, modalities) = CASES[index % CASES.len()];
    GradCheckCase {
        objective,
        strategy,
        modalities,
        normalize: (index / CASES.len()) % 2 == 0,
    }
}

/// Central-difference check of the full model gradient (encoder weights,
/// biases and log-temperature) on `configs` random small problems.
pub fn gradient_check(configs: usize, seed: u64, eps: f64, tolerance: f64) -> Result<GradCheckReport> {
    let mut reports = Vec::with_capacity(configs);
    for c in 0..configs {
        let case = gradcheck_case(c);
        let mut rng = indexed_substream(seed, "gradcheck", c as u64);
        let n = rng.random_range(2..=5);
        let d_out = rng.random_range(2..=4);
        let dims: Vec<usize> = (0..case.modalities).map(|_| rng.random_range(1..=3)).collect();
        let modalities: Vec<Array2<f64>> = dims
            .iter()
            .map(|&d| Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0..1.0)))
            .collect();
        let names = (0..case.modalities).map(|m| format!("m{m}")).collect();
        let meta = DatasetMeta {
            kind: "gradcheck".into(),
            seed,
            p_hat: None,
            i_mode: None,
            missing_p: None,
        };
        let data = Dataset::new(names, modalities, None, None, meta)?;
        let t = rng.random_range(-1.0..1.0);
        let params = ModelParams::init(&dims, d_out, case.normalize, t, false, &mut rng);
        let neg = draw_negatives(case.strategy, case.modalities, n, &mut rng);

        let analytic = batch_loss(&params, &data, case.objective, &neg)?.grads.flatten();
        let mut probe = params.clone();
        let numeric = finite_diff_grad(
            |theta| {
                probe.unflatten(theta).expect("same length");
                loss_value(&probe, &data, case.objective, &neg).unwrap_or(f64::NAN)
            },
            &params.flatten(),
            eps,
        )?;
        let label = case.label();
        let blocks: Vec<(String, usize)> = params
            .blocks()
            .into_iter()
            .map(|(name, len)| (format!("{c}:{label}:{name}"), len))
            .collect();
        reports.push(GradCheckReport::compare(&blocks, &analytic, &numeric, tolerance)?);
    }
    Ok(GradCheckReport::merge(&reports, tolerance))
}
