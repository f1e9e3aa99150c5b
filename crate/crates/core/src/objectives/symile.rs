use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::contrast::contrast_direction;
use super::logits::{exhaustive_raw, gather_others, non_anchor, product_except, NegativeStrategy};
use super::{check_scale, LossOutput, RepresentationSet};
use crate::error::{Error, Result};
use crate::numcore::mean_row_cross_entropy;

/// Concrete negatives for one loss evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Negatives {
    /// `perms[anchor][k]` shuffles the `k`-th non-anchor modality (ascending order).
    Permuted(Vec<Vec<Vec<usize>>>),
    /// All `N^2` combinations (three modalities only).
    Exhaustive,
}

/// Fresh permutations for every anchor, as each anchor's logits draw their own shuffles.
pub fn draw_negatives<R: Rng + ?Sized>(
    strategy: NegativeStrategy,
    modalities: usize,
    n: usize,
    rng: &mut R,
) -> Negatives {
    match strategy {
        NegativeStrategy::OnPermute => Negatives::Permuted(
            (0..modalities)
                .map(|_| {
                    (1..modalities)
                        .map(|_| {
                            let mut p: Vec<usize> = (0..n).collect();
                            p.shuffle(rng);
                            p
                        })
                        .collect()
                })
                .collect(),
        ),
        NegativeStrategy::OnSquared => Negatives::Exhaustive,
    }
}

/// Symile loss with negatives drawn from `rng`.
pub fn symile_loss<R: Rng + ?Sized>(
    reps: &RepresentationSet,
    scale: f64,
    strategy: NegativeStrategy,
    rng: &mut R,
) -> Result<LossOutput> {
    let neg = draw_negatives(strategy, reps.num_modalities(), reps.len(), rng);
    symile_loss_given(reps, scale, &neg)
}

/// Mean over anchors of the mean-over-rows cross-entropy of each anchor's
/// logits. `per_term[a]` is the loss with modality `a` as anchor.
pub fn symile_loss_given(reps: &RepresentationSet, scale: f64, negatives: &Negatives) -> Result<LossOutput> {
    check_scale(scale)?;
    let m = reps.num_modalities();
    if m < 2 {
        return Err(Error::InvalidArgument("Symile needs at least two modalities".into()));
    }
    if reps.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let weight = 1.0 / m as f64;
    let mut rep_grads: Vec<Array2<f64>> =
        (0..m).map(|k| Array2::zeros(reps.get(k).raw_dim())).collect();
    let mut per_term = Vec::with_capacity(m);
    let mut scale_grad = 0.0;

    match negatives {
        Negatives::Permuted(perms) => {
            if perms.len() != m {
                return Err(Error::InvalidPermutation(format!(
                    "permutations for {} anchors, {m} modalities",
                    perms.len()
                )));
            }
            for (anchor, anchor_perms) in perms.iter().enumerate() {
                let (loss, sg) = permuted_anchor(reps, anchor, anchor_perms, scale, weight, &mut rep_grads)?;
                per_term.push(loss);
                scale_grad += sg;
            }
        }
        Negatives::Exhaustive => {
            if m != 3 {
                return Err(Error::InvalidArgument(format!(
                    "exhaustive negatives are defined for 3 modalities, got {m}"
                )));
            }
            for anchor in 0..3 {
                let (loss, sg) = exhaustive_anchor(reps, anchor, scale, weight, &mut rep_grads)?;
                per_term.push(loss);
                scale_grad += sg;
            }
        }
    }

    let loss = per_term.iter().sum::<f64>() * weight;
    Ok(LossOutput {
        loss,
        per_term,
        rep_grads,
        scale_grad,
    })
}

fn permuted_anchor(
    reps: &RepresentationSet,
    anchor: usize,
    perms: &[Vec<usize>],
    scale: f64,
    weight: f64,
    rep_grads: &mut [Array2<f64>],
) -> Result<(f64, f64)> {
    let others = non_anchor(reps.num_modalities(), anchor);
    let gathered = gather_others(reps, anchor, perms)?;
    let gathered_refs: Vec<&Array2<f64>> = gathered.iter().collect();
    let plain_refs: Vec<&Array2<f64>> = others.iter().map(|&o| reps.get(o)).collect();
    let neg = product_except(&gathered_refs, None).expect("non-empty");
    let pos = product_except(&plain_refs, None).expect("non-empty");

    let (loss, grads) = contrast_direction(reps.get(anchor), &neg, &pos, scale, weight)?;
    rep_grads[anchor] += &grads.anchor;

    for (k, &o) in others.iter().enumerate() {
        // negatives: row j came from row perms[k][j] of modality o
        let mut d_neg = grads.neg.clone();
        if let Some(rest) = product_except(&gathered_refs, Some(k)) {
            d_neg *= &rest;
        }
        for (j, row) in d_neg.axis_iter(Axis(0)).enumerate() {
            let mut target = rep_grads[o].row_mut(perms[k][j]);
            target += &row;
        }
        let mut d_pos = grads.pos.clone();
        if let Some(rest) = product_except(&plain_refs, Some(k)) {
            d_pos *= &rest;
        }
        rep_grads[o] += &d_pos;
    }
    Ok((loss, grads.scale))
}

fn exhaustive_anchor(
    reps: &RepresentationSet,
    anchor: usize,
    scale: f64,
    weight: f64,
    rep_grads: &mut [Array2<f64>],
) -> Result<(f64, f64)> {
    let o = non_anchor(3, anchor);
    let (a, b, c) = (reps.get(anchor), reps.get(o[0]), reps.get(o[1]));
    let n = reps.len();
    let raw = exhaustive_raw(a, b, c);
    let logits = &raw * scale;
    let targets: Vec<usize> = (0..n).map(|i| i * n + i).collect();
    let (loss, mut g) = mean_row_cross_entropy(&logits, &targets)?;
    g *= weight;

    let scale_grad = ndarray::Zip::from(&g).and(&raw).fold(0.0, |acc, &gi, &ri| acc + gi * ri);
    let mut d_a = Array2::zeros(a.raw_dim());
    let mut d_b = Array2::zeros(b.raw_dim());
    let mut d_c = Array2::zeros(c.raw_dim());
    for j in 0..n {
        let gj = g.slice(s![.., j * n..(j + 1) * n]);
        let bj = b.row(j);
        let ab = a * &bj;
        let h = gj.dot(c) * scale;
        d_a += &(&h * &bj);
        let mut db = d_b.row_mut(j);
        db += &(&h * a).sum_axis(Axis(0));
        d_c.scaled_add(scale, &gj.t().dot(&ab));
    }
    rep_grads[anchor] += &d_a;
    rep_grads[o[0]] += &d_b;
    rep_grads[o[1]] += &d_c;
    Ok((loss, scale_grad))
}
