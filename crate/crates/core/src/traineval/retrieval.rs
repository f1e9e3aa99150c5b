use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::ModelParams;
use crate::rng::substream;
use crate::synthdata::Dataset;

use super::model::observed_column;

/// How candidates are scored against the query representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// Multilinear inner product of the queries and the candidate.
    Symile,
    /// Sum of the candidate's dot products with each query.
    Clip,
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerKind::Symile => "symile",
            ScorerKind::Clip => "clip",
        })
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symile" => Ok(ScorerKind::Symile),
            "clip" | "pairwise_clip" => Ok(ScorerKind::Clip),
            other => Err(Error::InvalidArgument(format!("unknown scorer `{other}`"))),
        }
    }
}

impl From<super::Objective> for ScorerKind {
    fn from(o: super::Objective) -> Self {
        match o {
            super::Objective::Symile => ScorerKind::Symile,
            super::Objective::PairwiseClip => ScorerKind::Clip,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub predicted: Vec<usize>,
    pub truth: Vec<usize>,
    /// `scores[q][k]` is candidate `k`'s score for query `q`.
    pub scores: Vec<Vec<f64>>,
}

impl RetrievalResult {
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn correct(&self) -> Vec<bool> {
        self.predicted.iter().zip(&self.truth).map(|(p, t)| p == t).collect()
    }

    pub fn accuracy(&self) -> f64 {
        if self.is_empty() {
            return f64::NAN;
        }
        self.correct().iter().filter(|&&c| c).count() as f64 / self.len() as f64
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

fn check_candidates(queries: &[ArrayView1<f64>], candidates: ArrayView2<f64>) -> Result<()> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("at least one query representation is required".into()));
    }
    if candidates.nrows() < 2 {
        return Err(Error::InvalidArgument("at least two candidates are required".into()));
    }
    let d = candidates.ncols();
    if queries.iter().any(|q| q.len() != d) {
        return Err(Error::ShapeMismatch(format!("queries and candidates must all have width {d}")));
    }
    Ok(())
}

/// `scores[k] = <q_1, ..., q_j, cand_k>`; no temperature (it does not change the ranking).
pub fn symile_candidate_scores(queries: &[ArrayView1<f64>], candidates: ArrayView2<f64>) -> Result<Vec<f64>> {
    check_candidates(queries, candidates)?;
    let mut prod = queries[0].to_owned();
    for q in &queries[1..] {
        prod *= q;
    }
    Ok(candidates.dot(&prod).to_vec())
}

/// `scores[k] = Σ_j q_j · cand_k`
pub fn clip_candidate_scores(queries: &[ArrayView1<f64>], candidates: ArrayView2<f64>) -> Result<Vec<f64>> {
    weighted_clip_candidate_scores(queries, &vec![1.0; queries.len()], candidates)
}

/// `scores[k] = Σ_j w_j q_j · cand_k`, for CLIP models with a learned scale per pair.
pub fn weighted_clip_candidate_scores(
    queries: &[ArrayView1<f64>],
    weights: &[f64],
    candidates: ArrayView2<f64>,
) -> Result<Vec<f64>> {
    check_candidates(queries, candidates)?;
    if weights.len() != queries.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} weights for {} queries",
            weights.len(),
            queries.len()
        )));
    }
    let mut sum = Array1::zeros(candidates.ncols());
    for (q, &w) in queries.iter().zip(weights) {
        sum.scaled_add(w, q);
    }
    Ok(candidates.dot(&sum).to_vec())
}

/// Position of the pair `{a, b}` in lexicographic pair order over `m` modalities.
fn pair_index(m: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    a * (2 * m - a - 1) / 2 + (b - a - 1)
}

/// Every binary vector of width `dims`; row `k` has bit `j` of `k` in column `j`.
pub fn all_binary_vectors(dims: usize) -> Result<Array2<f64>> {
    if dims == 0 || dims > 20 {
        return Err(Error::InvalidArgument(format!("cannot enumerate binary vectors of width {dims}")));
    }
    Ok(Array2::from_shape_fn((1 << dims, dims), |(k, j)| ((k >> j) & 1) as f64))
}

/// Zero-shot prediction of modality `target` from the others: each sample's
/// remaining modalities are the queries and all `2^dims` binary vectors of
/// the target modality are the candidates.
pub fn classify_target(params: &ModelParams, kind: ScorerKind, data: &Dataset, target: usize) -> Result<RetrievalResult> {
    let m = data.num_modalities();
    if target >= m || params.num_modalities() != m {
        return Err(Error::ShapeMismatch(format!(
            "target {target} with {m} data modalities and {} encoders",
            params.num_modalities()
        )));
    }
    let candidates = params.encode(target, all_binary_vectors(data.dims(target))?.view(), None)?;
    let query_reps: Vec<Array2<f64>> = (0..m)
        .filter(|&k| k != target)
        .map(|k| {
            let obs = observed_column(data, k);
            params.encode(k, data.modality(k).view(), obs.as_deref())
        })
        .collect::<Result<_>>()?;
    let clip_weights: Vec<f64> = match params.pair_scales() {
        Some(scales) => (0..m).filter(|&k| k != target).map(|k| scales[pair_index(m, k, target)]).collect(),
        None => vec![1.0; m - 1],
    };

    let mut out = RetrievalResult {
        predicted: Vec::with_capacity(data.len()),
        truth: Vec::with_capacity(data.len()),
        scores: Vec::with_capacity(data.len()),
    };
    for i in 0..data.len() {
        let queries: Vec<ArrayView1<f64>> = query_reps.iter().map(|r| r.row(i)).collect();
        let scores = match kind {
            ScorerKind::Symile => symile_candidate_scores(&queries, candidates.view())?,
            ScorerKind::Clip => weighted_clip_candidate_scores(&queries, &clip_weights, candidates.view())?,
        };
        out.predicted.push(argmax(&scores));
        out.truth.push(data.class_index(target, i));
        out.scores.push(scores);
    }
    Ok(out)
}

/// Predicts `b` (the second modality) from `(a, c)` over all of its `2^dims` values.
pub fn classify_b(params: &ModelParams, kind: ScorerKind, test: &Dataset) -> Result<RetrievalResult> {
    if test.num_modalities() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "expected three modalities (a, b, c), got {}",
            test.num_modalities()
        )));
    }
    classify_target(params, kind, test, 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Mean of the resample accuracies.
    pub mean_acc: f64,
    /// Standard deviation of the resample accuracies.
    pub se: f64,
    pub resamples: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

/// `b` with-replacement resamples of the per-query correctness vector.
pub fn bootstrap_accuracy(correct: &[bool], b: usize, seed: u64) -> Result<BootstrapReport> {
    if correct.is_empty() {
        return Err(Error::InvalidArgument("no retrieval results to resample".into()));
    }
    if b == 0 {
        return Err(Error::InvalidArgument("need at least one bootstrap resample".into()));
    }
    let n = correct.len();
    let mut rng = substream(seed, "bootstrap");
    let resamples: Vec<f64> = (0..b)
        .map(|_| (0..n).filter(|_| correct[rng.random_range(0..n)]).count() as f64 / n as f64)
        .collect();
    let mean_acc = resamples.iter().sum::<f64>() / b as f64;
    let se = if b > 1 {
        (resamples.iter().map(|a| (a - mean_acc).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapReport {
        mean_acc,
        se,
        resamples,
        n,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn pair_positions() {
        let pairs: Vec<usize> = [(0, 1), (0, 2), (1, 2), (2, 0)].iter().map(|&(a, b)| pair_index(3, a, b)).collect();
        assert_eq!(pairs, [0, 1, 2, 1]);
        assert_eq!(pair_index(4, 2, 3), 5);
    }

    #[test]
    fn weighted_clip_scores() {
        let q0 = array![1.0, 0.0];
        let q1 = array![0.0, 1.0];
        let cands = array![[1.0, 0.0], [0.0, 1.0]];
        let queries = [q0.view(), q1.view()];
        assert_eq!(clip_candidate_scores(&queries, cands.view()).unwrap(), [1.0, 1.0]);
        assert_eq!(weighted_clip_candidate_scores(&queries, &[0.5, 2.0], cands.view()).unwrap(), [0.5, 2.0]);
        assert!(weighted_clip_candidate_scores(&queries, &[1.0], cands.view()).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[2.0]), 0);
        assert_eq!(argmax(&[-1.0, -1.0]), 0);
    }

    #[test]
    fn score_rules() {
        let a = array![1.0, 2.0];
        let c = array![0.5, -1.0];
        let cands = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let s = symile_candidate_scores(&[a.view(), c.view()], cands.view()).unwrap();
        assert_eq!(s, vec![0.5, -2.0, 0.5]);
        let k = clip_candidate_scores(&[a.view(), c.view()], cands.view()).unwrap();
        assert_eq!(k, vec![1.5, 1.0, 1.5]);
        let swapped = clip_candidate_scores(&[c.view(), a.view()], cands.view()).unwrap();
        assert_eq!(k, swapped);
        // One query: both are the dot product.
        let one = symile_candidate_scores(&[a.view()], cands.view()).unwrap();
        assert_eq!(one, clip_candidate_scores(&[a.view()], cands.view()).unwrap());
        assert_eq!(one, vec![1.0, 2.0, 1.0]);
        assert!(symile_candidate_scores(&[a.view()], array![[1.0, 0.0]].view()).is_err());
        assert!(clip_candidate_scores(&[array![1.0].view()], cands.view()).is_err());
    }

    #[test]
    fn scaling_scores_keeps_predictions() {
        let s = [0.3, -1.2, 0.7, 0.7, 0.1];
        let scaled: Vec<f64> = s.iter().map(|v| v * 3.5).collect();
        assert_eq!(argmax(&s), argmax(&scaled));
    }

    #[test]
    fn binary_enumeration() {
        let v = all_binary_vectors(2).unwrap();
        assert_eq!(v, array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        assert_eq!(all_binary_vectors(5).unwrap().nrows(), 32);
    }

    #[test]
    fn bootstrap_extremes_and_spread() {
        let all = bootstrap_accuracy(&[true; 50], 10, 1).unwrap();
        assert_eq!((all.mean_acc, all.se, all.resamples.len()), (1.0, 0.0, 10));
        let none = bootstrap_accuracy(&[false; 50], 10, 1).unwrap();
        assert_eq!((none.mean_acc, none.se), (0.0, 0.0));
        let half: Vec<bool> = (0..5000).map(|i| i % 2 == 0).collect();
        let r = bootstrap_accuracy(&half, 10, 3).unwrap();
        // sqrt(0.25 / 5000) = 0.00707
        assert!((r.se - 0.00707).abs() < 0.004, "{}", r.se);
        assert!((r.mean_acc - 0.5).abs() < 0.01);
        assert!(bootstrap_accuracy(&[], 10, 1).is_err());
    }
}
