use log::warn;

use crate::error::{Error, Result};

fn check_prior(scores: &[f64], prior: &[f64]) -> Result<()> {
    if scores.is_empty() || scores.len() != prior.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores and {} prior entries",
            scores.len(),
            prior.len()
        )));
    }
    if prior.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidArgument("prior entries must be finite and nonnegative".into()));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("prior sums to {total}, not 1")));
    }
    if scores.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
        return Err(Error::NonFinite("candidate scores".into()));
    }
    Ok(())
}

/// `p(k) ∝ exp(scores[k]) · prior[k]`, computed after subtracting the largest
/// log-weight.
pub fn calibrated_conditional(scores: &[f64], prior: &[f64]) -> Result<Vec<f64>> {
    check_prior(scores, prior)?;
    let logw: Vec<f64> = scores.iter().zip(prior).map(|(s, p)| s + p.ln()).collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateInput("every candidate has zero weight".into()));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// Candidates ordered by `score + ln prior`, best first; ties keep the lower
/// index first. Zero-prior candidates are left out.
pub fn rank_with_prior(scores: &[f64], prior: &[f64]) -> Result<Vec<usize>> {
    check_prior(scores, prior)?;
    let mut keyed = Vec::with_capacity(scores.len());
    for (k, (s, p)) in scores.iter().zip(prior).enumerate() {
        if *p == 0.0 {
            warn!("candidate {k} has zero prior probability and is excluded from the ranking");
            continue;
        }
        keyed.push((k, s + p.ln()));
    }
    keyed.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(keyed.into_iter().map(|(k, _)| k).collect())
}

/// Two diseases with prior `(0.8, 0.2)` and a patient whose temperature gives
/// likelihood ratios `p(y | t) / p(y)` of `0.9375` and `1.25`. The scores are
/// the log ratios; the posterior is `(0.75, 0.25)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiseaseFixture {
    pub labels: [&'static str; 2],
    pub scores: [f64; 2],
    pub prior: [f64; 2],
    pub expected_posterior: [f64; 2],
}

pub fn disease_fixture() -> DiseaseFixture {
    // Joint over (disease, temperature):
    //        99   100  101  102
    //   a    0.1  0.1  0.3  0.3
    //   b    0    0    0.1  0.1
    // At t = 101: p(a|t) = 0.3/0.4, p(b|t) = 0.1/0.4.
    let p_t: f64 = 0.3 + 0.1;
    let prior: [f64; 2] = [0.8, 0.2];
    let post = [0.3 / p_t, 0.1 / p_t];
    DiseaseFixture {
        labels: ["a", "b"],
        scores: [(post[0] / prior[0]).ln(), (post[1] / prior[1]).ln()],
        prior,
        expected_posterior: post,
    }
}
