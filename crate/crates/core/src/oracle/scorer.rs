//! Tabular scoring functions, the optimal (log density ratio) scorer, and a
//! Monte-Carlo evaluator of the multi-sample contrastive lower bound on total
//! correlation.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::table::JointTable;
use crate::error::{Error, Result};
use crate::rng::substream;

/// A real score for every joint state of a table (indexed like the table).
/// `-inf` marks states that carry no joint mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularScorer {
    scores: Vec<f64>,
}

impl TabularScorer {
    pub fn new(scores: Vec<f64>) -> Self {
        Self { scores }
    }

    pub fn constant(states: usize, value: f64) -> Self {
        Self::new(vec![value; states])
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [f64] {
        &mut self.scores
    }

    pub fn get(&self, state: usize) -> f64 {
        self.scores[state]
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// A table split into disjoint variable groups (the modalities) that together
/// cover every variable.
#[derive(Debug, Clone)]
pub struct Partition {
    table: JointTable,
    /// Marginal probabilities of each group, indexed by group sub-state.
    marginals: Vec<Vec<f64>>,
    /// Contribution of each group sub-state to the full state index.
    contrib: Vec<Vec<usize>>,
    /// Group sub-state of every full state.
    sub_state: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new<S: AsRef<str>>(t: &JointTable, groups: &[&[S]]) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidArgument("need at least two groups".into()));
        }
        let mut covered = vec![false; t.num_vars()];
        let mut positions = Vec::with_capacity(groups.len());
        for g in groups {
            if g.is_empty() {
                return Err(Error::EmptyGroup);
            }
            let idx = t.indices_of(g)?;
            for &i in &idx {
                if covered[i] {
                    return Err(Error::OverlappingGroups(t.var_names()[i].clone()));
                }
                covered[i] = true;
            }
            positions.push(idx);
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidArgument(format!(
                "groups do not cover variable `{}`",
                t.var_names()[i]
            )));
        }

        let strides = t.strides();
        let arities = t.arities();
        let mut marginals = Vec::new();
        let mut contrib = Vec::new();
        let mut sub_state = Vec::new();
        for pos in &positions {
            let sub_ar: Vec<usize> = pos.iter().map(|&i| arities[i]).collect();
            let size: usize = sub_ar.iter().product();
            let mut c = vec![0usize; size];
            for (k, slot) in c.iter_mut().enumerate() {
                let mut rem = k;
                for (&i, &a) in pos.iter().zip(&sub_ar) {
                    *slot += (rem % a) * strides[i];
                    rem /= a;
                }
            }
            let subs: Vec<usize> = (0..t.num_states())
                .map(|s| super::table::project(s, arities, pos, &sub_ar))
                .collect();
            let mut m = vec![0.0; size];
            for (s, &p) in t.probs().iter().enumerate() {
                m[subs[s]] += p;
            }
            marginals.push(m);
            contrib.push(c);
            sub_state.push(subs);
        }
        Ok(Self {
            table: t.clone(),
            marginals,
            contrib,
            sub_state,
        })
    }

    pub fn table(&self) -> &JointTable {
        &self.table
    }

    pub fn num_groups(&self) -> usize {
        self.marginals.len()
    }

    /// `log p(s) - Σ_m log p_m(s_m)`, or `-inf` where `p(s) = 0`.
    pub fn log_ratio(&self, state: usize) -> f64 {
        let p = self.table.probs()[state];
        if p == 0.0 {
            return f64::NEG_INFINITY;
        }
        let q: f64 = (0..self.num_groups())
            .map(|g| self.marginals[g][self.sub_state[g][state]])
            .product();
        (p / q).ln()
    }
}

/// Optimal scorer `g*(s) = log p(s) / Π_m p(s_m)` with the additive constant
/// fixed to zero.
pub fn optimal_scorer<S: AsRef<str>>(t: &JointTable, groups: &[&[S]]) -> Result<TabularScorer> {
    let part = Partition::new(t, groups)?;
    Ok(optimal_scorer_for(&part))
}

pub fn optimal_scorer_for(part: &Partition) -> TabularScorer {
    TabularScorer::new(
        (0..part.table().num_states())
            .map(|s| part.log_ratio(s))
            .collect(),
    )
}

/// Draws contrastive batches: one positive tuple from the joint at position 0,
/// then `n - 1` tuples that share the positive's anchor value and take every
/// other group independently from its marginal.
pub struct ContrastiveBatchSampler<'a> {
    part: &'a Partition,
    anchor: usize,
    joint: WeightedIndex<f64>,
    margs: Vec<Option<WeightedIndex<f64>>>,
}

impl<'a> ContrastiveBatchSampler<'a> {
    pub fn new(part: &'a Partition, anchor: usize) -> Result<Self> {
        if anchor >= part.num_groups() {
            return Err(Error::InvalidArgument(format!(
                "anchor {anchor} out of range for {} groups",
                part.num_groups()
            )));
        }
        let joint = WeightedIndex::new(part.table().probs())
            .map_err(|e| Error::InvalidTable(e.to_string()))?;
        let margs = part
            .marginals
            .iter()
            .enumerate()
            .map(|(g, m)| {
                if g == anchor {
                    Ok(None)
                } else {
                    WeightedIndex::new(m)
                        .map(Some)
                        .map_err(|e| Error::InvalidTable(e.to_string()))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            part,
            anchor,
            joint,
            margs,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<usize>) {
        out.clear();
        let pos = self.joint.sample(rng);
        out.push(pos);
        let anchor_part = self.part.contrib[self.anchor][self.part.sub_state[self.anchor][pos]];
        for _ in 1..n {
            let mut s = anchor_part;
            for (g, m) in self.margs.iter().enumerate() {
                if let Some(m) = m {
                    s += self.part.contrib[g][m.sample(rng)];
                }
            }
            out.push(s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub batch_size: usize,
    pub mc_samples: usize,
}

/// `log N + log softmax(g)[positive]` for one batch, positive at index 0.
pub(crate) fn batch_term(g: &TabularScorer, batch: &[usize]) -> f64 {
    let pos = g.get(batch[0]);
    let max = batch
        .iter()
        .map(|&s| g.get(s))
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = batch.iter().map(|&s| (g.get(s) - max).exp()).sum();
    (batch.len() as f64).ln() + (pos - max) - sum.ln()
}

/// Monte-Carlo estimate (with standard error) of
/// `log N + E[log exp g(x, y_i, z_i) / Σ_j exp g(x, y_j, z_j)]` over batches
/// drawn by [`ContrastiveBatchSampler`] with the given anchor group.
pub fn bound_value(
    part: &Partition,
    g: &TabularScorer,
    anchor: usize,
    batch_size: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<BoundEstimate> {
    if batch_size == 0 || mc_samples == 0 {
        return Err(Error::InvalidArgument(
            "batch size and Monte-Carlo sample count must be at least 1".into(),
        ));
    }
    if g.len() != part.table().num_states() {
        return Err(Error::ShapeMismatch(format!(
            "scorer has {} states, table has {}",
            g.len(),
            part.table().num_states()
        )));
    }
    let sampler = ContrastiveBatchSampler::new(part, anchor)?;
    let mut rng = substream(seed, &format!("bound/anchor={anchor}/n={batch_size}"));
    let mut batch = Vec::with_capacity(batch_size);
    // Welford accumulation.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for k in 0..mc_samples {
        sampler.sample(&mut rng, batch_size, &mut batch);
        let term = batch_term(g, &batch);
        if !term.is_finite() {
            return Err(Error::NonFinite(format!(
                "bound term (positive state {} has score {})",
                batch[0],
                g.get(batch[0])
            )));
        }
        let delta = term - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (term - mean);
    }
    let std_error = if mc_samples > 1 {
        (m2 / (mc_samples - 1) as f64 / mc_samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(BoundEstimate {
        estimate: mean,
        std_error,
        batch_size,
        mc_samples,
    })
}
