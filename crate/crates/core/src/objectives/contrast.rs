//! The shared anchor-vs-candidates kernel behind every loss.
//!
//! For an anchor matrix `A` (N x D), a negatives matrix `P` and a positives
//! matrix `Q` (both N x D, already multiplied across the non-anchor
//! modalities), the raw scores are `A_i · P_j` off the diagonal and
//! `A_i · Q_i` on it. Row `i`'s target is column `i`.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, Axis};
use wide::f64x4;

use crate::error::{Error, Result};

/// Plain left-to-right dot product; used for every positive score so the
/// diagonal is computed identically whichever loss builds it.
#[inline]
pub(crate) fn row_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn raw_scores(anchor: &Array2<f64>, neg: &Array2<f64>, pos: &Array2<f64>) -> Array2<f64> {
    // Written into a row-major buffer: `dot` may pick column-major output
    // when D = 1 makes both operands contiguous either way.
    let mut raw = Array2::zeros((anchor.nrows(), neg.nrows()));
    general_mat_mul(1.0, anchor, &neg.t(), 0.0, &mut raw);
    for i in 0..anchor.nrows() {
        let a = anchor.row(i);
        let q = pos.row(i);
        raw[[i, i]] = match (a.as_slice(), q.as_slice()) {
            (Some(a), Some(q)) => row_dot(a, q),
            _ => row_dot(&a.to_vec(), &q.to_vec()),
        };
    }
    raw
}

/// Softmax cross-entropy of `scale * raw` with diagonal targets, fused with
/// its backward pass.
pub(crate) struct RowSoftmax {
    /// Mean over rows of the cross-entropy.
    pub loss: f64,
    /// `scale * G` with the diagonal zeroed, where `G = weight * dloss/dlogits`.
    pub off: Array2<f64>,
    /// Diagonal of `G`.
    pub diag: Vec<f64>,
    /// `Σ G ∘ raw`, the gradient with respect to `scale`.
    pub scale_grad: f64,
}

/// `x ← exp(x)` four lanes at a time. Every element goes through the same
/// vector routine, so results do not depend on an element's position.
pub(crate) fn exp_in_place(xs: &mut [f64]) {
    let mut chunks = xs.chunks_exact_mut(4);
    for c in &mut chunks {
        let v = f64x4::from([c[0], c[1], c[2], c[3]]).exp();
        c.copy_from_slice(&v.to_array());
    }
    for x in chunks.into_remainder() {
        *x = f64x4::splat(*x).exp().to_array()[0];
    }
}

fn row_max(r: &[f64]) -> f64 {
    let mut lanes = f64x4::splat(f64::NEG_INFINITY);
    let mut chunks = r.chunks_exact(4);
    for c in &mut chunks {
        lanes = lanes.max(f64x4::from([c[0], c[1], c[2], c[3]]));
    }
    let tail = chunks.remainder().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lanes.to_array().into_iter().fold(tail, f64::max)
}

fn check_square(raw: &Array2<f64>) -> Result<usize> {
    let n = raw.nrows();
    if n == 0 || raw.ncols() != n {
        return Err(Error::ShapeMismatch(format!("score matrix {:?} is not square", raw.dim())));
    }
    Ok(n)
}

fn finish(total: f64, scale_grad: f64, n: usize, off: Array2<f64>, diag: Vec<f64>) -> Result<RowSoftmax> {
    if !total.is_finite() || !scale_grad.is_finite() {
        return Err(Error::NonFinite("logits".into()));
    }
    Ok(RowSoftmax {
        loss: total / n as f64,
        off,
        diag,
        scale_grad,
    })
}

pub(crate) fn row_softmax(raw: &Array2<f64>, scale: f64, weight: f64) -> Result<RowSoftmax> {
    let n = check_square(raw)?;
    let coef = weight / n as f64;
    let mut off = Array2::<f64>::zeros((n, n));
    let mut diag = vec![0.0; n];
    let mut total = 0.0;
    let mut scale_grad = 0.0;
    for (i, (r, mut o)) in raw.rows().into_iter().zip(off.rows_mut()).enumerate() {
        let r = r.as_slice().expect("standard layout");
        let o = o.as_slice_mut().expect("standard layout");
        // scale > 0, so the largest logit is scale times the largest score.
        let max = scale * row_max(r);
        for (e, &v) in o.iter_mut().zip(r) {
            *e = scale * v - max;
        }
        exp_in_place(o);
        let sum: f64 = o.iter().sum();
        total += sum.ln() - (scale * r[i] - max);
        let inv = coef / sum;
        let mut sg = 0.0;
        for (e, &v) in o.iter_mut().zip(r) {
            let g = *e * inv;
            sg += g * v;
            *e = scale * g;
        }
        diag[i] = o[i] / scale - coef;
        o[i] = 0.0;
        scale_grad += sg - coef * r[i];
    }
    finish(total, scale_grad, n, off, diag)
}

/// Both CLIP directions of one score matrix, each with weight 1/2: rows
/// give x→y, columns give y→x. Consumes `raw` to hold the column
/// exponentials, so only one `N x N` gradient buffer is allocated.
pub(crate) struct PairSoftmax {
    pub xy: f64,
    pub yx: f64,
    /// `loss` is the mean of the two directions.
    pub combined: RowSoftmax,
}

/// The row half matches [`row_softmax`] exactly, and the column half sums
/// the same elements in the same order as [`row_softmax`] on `rawᵀ`. Both
/// direction losses are therefore bitwise identical to the single-direction
/// kernel.
pub(crate) fn pair_softmax(mut raw: Array2<f64>, scale: f64) -> Result<PairSoftmax> {
    let n = check_square(&raw)?;
    let coef = 0.5 / n as f64;
    let raw_diag: Vec<f64> = (0..n).map(|i| raw[[i, i]]).collect();
    let mut off = Array2::<f64>::zeros((n, n));
    let mut diag = vec![0.0; n];
    let mut col_max = vec![f64::NEG_INFINITY; n];

    // x→y, row by row; column maxima ride along.
    let mut total = 0.0;
    let mut scale_grad = 0.0;
    for (i, (r, mut o)) in raw.rows().into_iter().zip(off.rows_mut()).enumerate() {
        let r = r.as_slice().expect("standard layout");
        let o = o.as_slice_mut().expect("standard layout");
        for (m, &v) in col_max.iter_mut().zip(r) {
            *m = m.max(v);
        }
        let max = scale * row_max(r);
        for (e, &v) in o.iter_mut().zip(r) {
            *e = scale * v - max;
        }
        exp_in_place(o);
        let sum: f64 = o.iter().sum();
        total += sum.ln() - (scale * r[i] - max);
        let inv = coef / sum;
        let mut sg = 0.0;
        for (e, &v) in o.iter_mut().zip(r) {
            let g = *e * inv;
            sg += g * v;
            *e = scale * g;
        }
        diag[i] = o[i] / scale - coef;
        o[i] = 0.0;
        scale_grad += sg - coef * r[i];
    }
    let xy = finish(total, scale_grad, n, Array2::zeros((0, 0)), Vec::new())?;

    // y→x: column exponentials overwrite `raw`; `Σ_i e_ij raw_ij` is kept per
    // column for the scale gradient.
    let shift: Vec<f64> = col_max.iter().map(|&m| scale * m).collect();
    let mut sums = vec![0.0; n];
    let mut weighted = vec![0.0; n];
    let mut scores = vec![0.0; n];
    for mut r in raw.rows_mut() {
        let r = r.as_slice_mut().expect("standard layout");
        scores.copy_from_slice(r);
        for ((e, &v), &c) in r.iter_mut().zip(&scores).zip(&shift) {
            *e = scale * v - c;
        }
        exp_in_place(r);
        for (((s, w), &e), &v) in sums.iter_mut().zip(&mut weighted).zip(r.iter()).zip(&scores) {
            *s += e;
            *w += e * v;
        }
    }
    let mut total = 0.0;
    for j in 0..n {
        total += sums[j].ln() - (scale * raw_diag[j] - shift[j]);
    }
    let inv: Vec<f64> = sums.iter().map(|&s| coef / s).collect();
    let mut scale_grad = 0.0;
    for j in 0..n {
        scale_grad += inv[j] * weighted[j] - coef * raw_diag[j];
    }
    for (i, (r, mut o)) in raw.rows().into_iter().zip(off.rows_mut()).enumerate() {
        let r = r.as_slice().expect("standard layout");
        let o = o.as_slice_mut().expect("standard layout");
        let keep = o[i];
        for ((e, &p), &w) in o.iter_mut().zip(r).zip(&inv) {
            *e += scale * (p * w);
        }
        o[i] = keep;
        diag[i] += (scale * (r[i] * inv[i])) / scale - coef;
    }
    let yx = finish(total, scale_grad, n, Array2::zeros((0, 0)), Vec::new())?;

    Ok(PairSoftmax {
        xy: xy.loss,
        yx: yx.loss,
        combined: RowSoftmax {
            loss: 0.5 * (xy.loss + yx.loss),
            off,
            diag,
            scale_grad: xy.scale_grad + yx.scale_grad,
        },
    })
}

pub(crate) struct ContrastGrads {
    pub anchor: Array2<f64>,
    pub neg: Array2<f64>,
    pub pos: Array2<f64>,
    /// dL/d(scale)
    pub scale: f64,
}

/// Backward through `scale * raw_scores(anchor, neg, pos)`.
pub(crate) fn contrast_backward(
    anchor: &Array2<f64>,
    neg: &Array2<f64>,
    pos: &Array2<f64>,
    sm: &RowSoftmax,
    scale: f64,
) -> ContrastGrads {
    let mut d_anchor = sm.off.dot(neg);
    let mut d_pos = anchor.clone();
    for (i, (mut da, mut dq)) in d_anchor
        .axis_iter_mut(Axis(0))
        .zip(d_pos.axis_iter_mut(Axis(0)))
        .enumerate()
    {
        let w = scale * sm.diag[i];
        da.scaled_add(w, &pos.row(i));
        dq *= w;
    }
    let d_neg = sm.off.t().dot(anchor);
    ContrastGrads {
        anchor: d_anchor,
        neg: d_neg,
        pos: d_pos,
        scale: sm.scale_grad,
    }
}

/// Loss (unweighted) of one anchor direction and the gradients of
/// `weight * loss`.
pub(crate) fn contrast_direction(
    anchor: &Array2<f64>,
    neg: &Array2<f64>,
    pos: &Array2<f64>,
    scale: f64,
    weight: f64,
) -> Result<(f64, ContrastGrads)> {
    let raw = raw_scores(anchor, neg, pos);
    let sm = row_softmax(&raw, scale, weight)?;
    Ok((sm.loss, contrast_backward(anchor, neg, pos, &sm, scale)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::mean_row_cross_entropy;
    use ndarray::array;

    #[test]
    fn fused_softmax_matches_reference() {
        let raw = array![[0.3, -1.0, 2.0], [0.5, 0.1, -0.2], [1.5, 1.5, 0.0]];
        let (scale, weight) = (1.7, 0.25);
        let sm = row_softmax(&raw, scale, weight).unwrap();
        let (loss, g) = mean_row_cross_entropy(&(&raw * scale), &[0, 1, 2]).unwrap();
        assert!((sm.loss - loss).abs() < 1e-15);
        let mut sg = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let gij = weight * g[[i, j]];
                sg += gij * raw[[i, j]];
                if i == j {
                    assert!((sm.diag[i] - gij).abs() < 1e-15);
                    assert_eq!(sm.off[[i, j]], 0.0);
                } else {
                    assert!((sm.off[[i, j]] - scale * gij).abs() < 1e-15);
                }
            }
        }
        assert!((sm.scale_grad - sg).abs() < 1e-15);
    }

    #[test]
    fn pair_softmax_matches_two_row_softmaxes() {
        let raw = array![[0.3, -1.0, 2.0, 0.7, 0.1], [0.5, 0.1, -0.2, -3.0, 1.2], [1.5, 1.5, 0.0, 0.4, -0.6],
            [0.2, 0.9, -1.1, 0.0, 2.5], [-0.4, 0.3, 0.8, 1.9, 0.05]];
        let scale = 2.3;
        let pair = pair_softmax(raw.clone(), scale).unwrap();
        let row = row_softmax(&raw, scale, 0.5).unwrap();
        let col = row_softmax(&raw.t().as_standard_layout().into_owned(), scale, 0.5).unwrap();
        assert_eq!(pair.xy.to_bits(), row.loss.to_bits());
        assert_eq!(pair.yx.to_bits(), col.loss.to_bits());
        let c = &pair.combined;
        for i in 0..5 {
            assert!((c.diag[i] - (row.diag[i] + col.diag[i])).abs() < 1e-15);
            for j in 0..5 {
                assert!((c.off[[i, j]] - (row.off[[i, j]] + col.off[[j, i]])).abs() < 1e-15);
            }
        }
        assert!((c.scale_grad - (row.scale_grad + col.scale_grad)).abs() < 1e-14);
    }

    #[test]
    fn vector_exp_is_accurate() {
        let mut xs: Vec<f64> = (0..1003).map(|k| -700.0 + 0.7 * k as f64).collect();
        let expected: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        exp_in_place(&mut xs);
        for (got, want) in xs.iter().zip(&expected) {
            assert!(((got - want) / want).abs() < 4.0 * f64::EPSILON, "{got} vs {want}");
        }
    }

    #[test]
    fn rejects_non_finite() {
        let raw = array![[f64::NAN, 0.0], [0.0, 0.0]];
        assert!(row_softmax(&raw, 1.0, 1.0).is_err());
    }
}
