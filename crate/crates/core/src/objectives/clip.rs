use ndarray::Array2;

use super::contrast::{contrast_backward, pair_softmax, raw_scores};
use super::{check_scale, LossOutput, RepresentationSet};
use crate::error::{Error, Result};

/// `½ [ℓ(x→y) + ℓ(y→x)]` with logits `scale · r_x r_yᵀ`.
/// `per_term` holds the two directional losses.
pub fn clip_pair_loss(rx: &Array2<f64>, ry: &Array2<f64>, scale: f64) -> Result<LossOutput> {
    check_scale(scale)?;
    if rx.nrows() == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if rx.dim() != ry.dim() {
        return Err(Error::ShapeMismatch(format!(
            "pair representations {:?} and {:?}",
            rx.dim(),
            ry.dim()
        )));
    }
    let rx = rx.as_standard_layout().into_owned();
    let ry = ry.as_standard_layout().into_owned();
    // One score matrix serves both directions: y→x normalizes its columns.
    let pair = pair_softmax(raw_scores(&rx, &ry, &ry), scale)?;
    let combined = pair.combined;
    let grads = contrast_backward(&rx, &ry, &ry, &combined, scale);
    Ok(LossOutput {
        loss: combined.loss,
        per_term: vec![pair.xy, pair.yx],
        rep_grads: vec![grads.anchor, grads.neg + grads.pos],
        scale_grad: grads.scale,
    })
}

/// Sum of [`clip_pair_loss`] over every unordered modality pair, pairs in
/// lexicographic order `(0,1), (0,2), ..., (M-2, M-1)`.
pub fn pairwise_clip_loss(reps: &RepresentationSet, scale: f64) -> Result<LossOutput> {
    let pairs = reps.num_modalities() * reps.num_modalities().saturating_sub(1) / 2;
    Ok(pairwise_clip_loss_scaled(reps, &vec![scale; pairs])?.0)
}

/// [`pairwise_clip_loss`] with its own scale for every pair. Also returns
/// `dL/d(scale_k)` per pair; `scale_grad` of the output is their sum.
pub fn pairwise_clip_loss_scaled(reps: &RepresentationSet, scales: &[f64]) -> Result<(LossOutput, Vec<f64>)> {
    let m = reps.num_modalities();
    if m < 2 {
        return Err(Error::InvalidArgument("pairwise CLIP needs at least two modalities".into()));
    }
    if scales.len() != m * (m - 1) / 2 {
        return Err(Error::InvalidArgument(format!(
            "{} scales for {} modality pairs",
            scales.len(),
            m * (m - 1) / 2
        )));
    }
    let mut rep_grads: Vec<Array2<f64>> =
        (0..m).map(|k| Array2::zeros(reps.get(k).raw_dim())).collect();
    let mut per_term = Vec::new();
    let mut scale_grads = Vec::with_capacity(scales.len());
    let mut loss = 0.0;
    let mut it = scales.iter();
    for a in 0..m {
        for b in a + 1..m {
            let pair = clip_pair_loss(reps.get(a), reps.get(b), *it.next().expect("length checked"))?;
            loss += pair.loss;
            per_term.push(pair.loss);
            scale_grads.push(pair.scale_grad);
            let [ga, gb]: [Array2<f64>; 2] = pair.rep_grads.try_into().expect("two grads");
            rep_grads[a] += &ga;
            rep_grads[b] += &gb;
        }
    }
    let out = LossOutput {
        loss,
        per_term,
        rep_grads,
        scale_grad: scale_grads.iter().sum(),
    };
    Ok((out, scale_grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_sample_is_zero() {
        let out = clip_pair_loss(&array![[0.3, 0.4]], &array![[1.0, -2.0]], 1.0).unwrap();
        assert_eq!(out.loss, 0.0);
    }

    #[test]
    fn identical_rows_give_log_n() {
        let r = Array2::from_elem((5, 3), 0.4);
        let out = clip_pair_loss(&r, &r, 2.0).unwrap();
        assert!((out.loss - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_by_hand() {
        // Logits [[1, 0], [0, 1]] in both directions: -log(e / (e + 1)).
        let eye = array![[1.0, 0.0], [0.0, 1.0]];
        let out = clip_pair_loss(&eye, &eye, 1.0).unwrap();
        let e = std::f64::consts::E;
        let expected = -(e / (e + 1.0)).ln();
        assert!((expected - 0.31326168751822286).abs() < 1e-15);
        assert!((out.loss - expected).abs() < 1e-15);
        assert!((out.per_term[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn pairwise_reductions() {
        let x = array![[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]];
        let y = array![[0.0, 1.0], [1.0, 0.0], [0.8, 0.6]];
        let z = array![[0.6, -0.8], [-1.0, 0.0], [0.0, -1.0]];
        let two = RepresentationSet::new(vec![x.clone(), y.clone()]).unwrap();
        assert_eq!(
            pairwise_clip_loss(&two, 1.3).unwrap().loss,
            clip_pair_loss(&x, &y, 1.3).unwrap().loss
        );
        let three = RepresentationSet::new(vec![x.clone(), y.clone(), z.clone()]).unwrap();
        let sum = clip_pair_loss(&x, &y, 1.3).unwrap().loss
            + clip_pair_loss(&x, &z, 1.3).unwrap().loss
            + clip_pair_loss(&y, &z, 1.3).unwrap().loss;
        assert!((pairwise_clip_loss(&three, 1.3).unwrap().loss - sum).abs() < 1e-14);

        let same = Array2::from_elem((4, 2), 0.5);
        let uniform = RepresentationSet::new(vec![same.clone(), same.clone(), same]).unwrap();
        assert!((pairwise_clip_loss(&uniform, 1.0).unwrap().loss - 3.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn per_pair_scales() {
        let x = array![[1.0, 0.0], [0.6, 0.8], [0.0, 1.0]];
        let y = array![[0.0, 1.0], [1.0, 0.0], [0.8, 0.6]];
        let z = array![[0.6, -0.8], [-1.0, 0.0], [0.0, -1.0]];
        let three = RepresentationSet::new(vec![x.clone(), y.clone(), z.clone()]).unwrap();
        let (out, grads) = pairwise_clip_loss_scaled(&three, &[0.5, 1.0, 2.0]).unwrap();
        let pairs = [(&x, &y, 0.5), (&x, &z, 1.0), (&y, &z, 2.0)];
        for (k, (a, b, s)) in pairs.into_iter().enumerate() {
            let p = clip_pair_loss(a, b, s).unwrap();
            assert_eq!(out.per_term[k], p.loss);
            assert_eq!(grads[k], p.scale_grad);
        }
        let shared = pairwise_clip_loss(&three, 1.0).unwrap();
        let (same, _) = pairwise_clip_loss_scaled(&three, &[1.0; 3]).unwrap();
        assert_eq!(shared.loss, same.loss);
        assert!(pairwise_clip_loss_scaled(&three, &[1.0; 2]).is_err());
    }

    #[test]
    fn rejects_empty_and_mismatched() {
        let empty = Array2::<f64>::zeros((0, 2));
        assert!(clip_pair_loss(&empty, &empty, 1.0).is_err());
        assert!(clip_pair_loss(&array![[1.0]], &array![[1.0, 2.0]], 1.0).is_err());
    }
}
