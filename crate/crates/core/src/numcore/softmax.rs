use ndarray::Array2;

use crate::error::{Error, Result};

/// Loss for one row, writing `softmax - onehot(target)` into `grad`.
pub(crate) fn softmax_ce_into(logits: &[f64], target: usize, grad: &mut [f64]) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "target {target} out of range for {} logits",
            logits.len()
        )));
    }
    let mut max = f64::NEG_INFINITY;
    for &l in logits {
        if !l.is_finite() {
            return Err(Error::NonFinite("logits".into()));
        }
        max = max.max(l);
    }
    let mut sum = 0.0;
    for (g, &l) in grad.iter_mut().zip(logits) {
        let e = (l - max).exp();
        *g = e;
        sum += e;
    }
    let inv = 1.0 / sum;
    for g in grad.iter_mut() {
        *g *= inv;
    }
    grad[target] -= 1.0;
    Ok(sum.ln() - (logits[target] - max))
}

/// `-log softmax(logits)[target]` and its gradient with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; logits.len()];
    let loss = softmax_ce_into(logits, target, &mut grad)?;
    Ok((loss, grad))
}

/// Mean cross-entropy over rows, and the gradient of that mean.
pub fn mean_row_cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> Result<(f64, Array2<f64>)> {
    let n = logits.nrows();
    if targets.len() != n || n == 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} targets for {n} logit rows",
            targets.len()
        )));
    }
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = 0.0;
    for ((row, mut g), &t) in logits.rows().into_iter().zip(grad.rows_mut()).zip(targets) {
        let g = g.as_slice_mut().expect("fresh array is contiguous");
        total += match row.as_slice() {
            Some(r) => softmax_ce_into(r, t, g)?,
            None => softmax_ce_into(&row.to_vec(), t, g)?,
        };
    }
    let inv = 1.0 / n as f64;
    grad *= inv;
    Ok((total * inv, grad))
}

/// Numerically stable `log Σ exp(v)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_give_log_n() {
        for n in [1usize, 2, 7, 1000] {
            let (l, _) = softmax_cross_entropy(&vec![0.3; n], n - 1).unwrap();
            assert!((l - (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (l, g) = softmax_cross_entropy(&[1000.0, 0.0], 0).unwrap();
        assert!(l.abs() < 1e-300);
        assert!(g.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn two_way_gradient() {
        let (_, g) = softmax_cross_entropy(&[0.0, 0.0], 0).unwrap();
        assert_eq!(g, vec![-0.5, 0.5]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            softmax_cross_entropy(&[0.0, f64::NAN], 0),
            Err(Error::NonFinite(_))
        ));
        assert!(softmax_cross_entropy(&[0.0, 1.0], 2).is_err());
    }

    #[test]
    fn lse() {
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 1.0]), 1.0);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn shift_invariance(
            logits in proptest::collection::vec(-30.0f64..30.0, 1..12),
            shift in -100.0f64..100.0,
            t in 0usize..12,
        ) {
            let t = t % logits.len();
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let (a, _) = softmax_cross_entropy(&logits, t).unwrap();
            let (b, _) = softmax_cross_entropy(&shifted, t).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn gradient_sums_to_zero(logits in proptest::collection::vec(-30.0f64..30.0, 1..12)) {
            let (_, g) = softmax_cross_entropy(&logits, 0).unwrap();
            prop_assert!(g.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
