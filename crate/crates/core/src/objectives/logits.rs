use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::contrast::raw_scores;
use super::{check_scale, RepresentationSet};
use crate::error::{Error, Result};

/// How negatives are formed for the non-anchor modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum NegativeStrategy {
    /// Shuffle each non-anchor modality within the batch: `N - 1` negatives per row.
    #[default]
    #[serde(rename = "on")]
    OnPermute,
    /// Every combination of the two non-anchor modalities: `N^2 - 1`
    /// negatives per row. Three modalities only.
    #[serde(rename = "on2")]
    OnSquared,
}

impl fmt::Display for NegativeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativeStrategy::OnPermute => "on",
            NegativeStrategy::OnSquared => "on2",
        })
    }
}

impl FromStr for NegativeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "on" | "o(n)" => Ok(NegativeStrategy::OnPermute),
            "on2" | "o(n2)" | "o(n^2)" => Ok(NegativeStrategy::OnSquared),
            other => Err(Error::InvalidArgument(format!("unknown negative strategy `{other}`"))),
        }
    }
}

/// Scores of one anchor modality against its candidates; row `i` is
/// classified with target column `targets[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitsMatrix {
    pub logits: Array2<f64>,
    pub targets: Vec<usize>,
}

pub(crate) fn non_anchor(m: usize, anchor: usize) -> Vec<usize> {
    (0..m).filter(|&k| k != anchor).collect()
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} for batch of {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!("entry {p} out of range or repeated")));
        }
    }
    Ok(())
}

/// Rows of each non-anchor modality reordered by its permutation.
pub(crate) fn gather_others(
    reps: &RepresentationSet,
    anchor: usize,
    perms: &[Vec<usize>],
) -> Result<Vec<Array2<f64>>> {
    let m = reps.num_modalities();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two modalities".into()));
    }
    if anchor >= m {
        return Err(Error::InvalidArgument(format!("anchor {anchor} out of range")));
    }
    if perms.len() != m - 1 {
        return Err(Error::InvalidPermutation(format!(
            "{} permutations for {} non-anchor modalities",
            perms.len(),
            m - 1
        )));
    }
    non_anchor(m, anchor)
        .into_iter()
        .zip(perms)
        .map(|(o, p)| {
            check_permutation(p, reps.len())?;
            Ok(reps.get(o).select(Axis(0), p))
        })
        .collect()
}

/// Element-wise product of `mats`, skipping index `skip`; `None` when nothing is left.
pub(crate) fn product_except(mats: &[&Array2<f64>], skip: Option<usize>) -> Option<Array2<f64>> {
    let mut it = mats.iter().enumerate().filter(|(k, _)| Some(*k) != skip).map(|(_, m)| *m);
    let mut acc = it.next()?.clone();
    for m in it {
        acc *= m;
    }
    Some(acc)
}

/// O(N) logits for one anchor, generalized to any number of modalities:
/// column `j` of row `i` holds `scale * <anchor_i, {m_{perm_m[j]}}>`, and the
/// diagonal is overwritten with the matched tuple `scale * <anchor_i, {m_i}>`.
///
/// `perms` has one permutation per non-anchor modality in ascending modality
/// order. Fixed points are not excluded, so with identity permutations the
/// off-diagonal columns hold other matched tuples.
pub fn build_logits_on(
    anchor: usize,
    reps: &RepresentationSet,
    perms: &[Vec<usize>],
    scale: f64,
) -> Result<LogitsMatrix> {
    check_scale(scale)?;
    let gathered = gather_others(reps, anchor, perms)?;
    let refs: Vec<&Array2<f64>> = gathered.iter().collect();
    let neg = product_except(&refs, None).expect("at least one other modality");
    let others: Vec<&Array2<f64>> = non_anchor(reps.num_modalities(), anchor)
        .into_iter()
        .map(|o| reps.get(o))
        .collect();
    let pos = product_except(&others, None).expect("at least one other modality");
    let logits = raw_scores(reps.get(anchor), &neg, &pos) * scale;
    Ok(LogitsMatrix {
        logits,
        targets: (0..reps.len()).collect(),
    })
}

/// Raw `<a_i, b_j, c_k>` at column `j * N + k`.
pub(crate) fn exhaustive_raw(a: &Array2<f64>, b: &Array2<f64>, c: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    let mut raw = Array2::zeros((n, n * n));
    for j in 0..n {
        let ab = a * &b.row(j);
        raw.slice_mut(s![.., j * n..(j + 1) * n]).assign(&ab.dot(&c.t()));
    }
    raw
}

/// O(N^2) logits for three modalities: row `i` scores the anchor against
/// every pair of the other two, `scale * <x_i, y_j, z_k>` at column
/// `j * N + k`, with the positive at column `i * N + i`.
pub fn build_logits_on2(anchor: usize, reps: &RepresentationSet, scale: f64) -> Result<LogitsMatrix> {
    check_scale(scale)?;
    if reps.num_modalities() != 3 {
        return Err(Error::InvalidArgument(format!(
            "exhaustive negatives are defined for 3 modalities, got {}",
            reps.num_modalities()
        )));
    }
    if anchor >= 3 {
        return Err(Error::InvalidArgument(format!("anchor {anchor} out of range")));
    }
    let o = non_anchor(3, anchor);
    let n = reps.len();
    let logits = exhaustive_raw(reps.get(anchor), reps.get(o[0]), reps.get(o[1])) * scale;
    Ok(LogitsMatrix {
        logits,
        targets: (0..n).map(|i| i * n + i).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::mip;
    use ndarray::array;

    fn hand_reps() -> RepresentationSet {
        RepresentationSet::new(vec![
            array![[1.0, 2.0], [0.5, -1.0]],
            array![[3.0, -1.0], [2.0, 0.25]],
            array![[-2.0, 1.0], [4.0, 0.5]],
        ])
        .unwrap()
    }

    #[test]
    fn on_matches_hand_expansion() {
        // y shuffled by [1, 0], z left in place: column 0 pairs (y1, z0),
        // column 1 pairs (y0, z1); the diagonal holds the matched triples.
        //   [0][0] = 2 * (1*3*-2 + 2*-1*1)        = -16
        //   [0][1] = 2 * (1*3*4 + 2*-1*0.5)       =  22
        //   [1][0] = 2 * (0.5*2*-2 + -1*0.25*1)   = -4.5
        //   [1][1] = 2 * (0.5*2*4 + -1*0.25*0.5)  =  7.75
        let r = hand_reps();
        let l = build_logits_on(0, &r, &[vec![1, 0], vec![0, 1]], 2.0).unwrap();
        assert_eq!(l.logits, array![[-16.0, 22.0], [-4.5, 7.75]]);
        assert_eq!(l.targets, vec![0, 1]);
    }

    #[test]
    fn identity_permutations_keep_matched_tuples_as_negatives() {
        let r = hand_reps();
        let id = vec![vec![0, 1], vec![0, 1]];
        for anchor in 0..3 {
            let l = build_logits_on(anchor, &r, &id, 1.5).unwrap();
            let o = non_anchor(3, anchor);
            for i in 0..2 {
                for j in 0..2 {
                    let row = |m: usize, k: usize| r.get(m).row(k).to_vec();
                    let expected = 1.5
                        * mip(&[&row(anchor, i), &row(o[0], j), &row(o[1], j)]).unwrap();
                    assert!((l.logits[[i, j]] - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn on2_matches_brute_force() {
        let r = hand_reps();
        let n = 2;
        for anchor in 0..3 {
            let l = build_logits_on2(anchor, &r, 0.7).unwrap();
            assert_eq!(l.logits.dim(), (2, 4));
            let o = non_anchor(3, anchor);
            for i in 0..n {
                assert_eq!(l.targets[i], i * n + i);
                for j in 0..n {
                    for k in 0..n {
                        let v = 0.7
                            * mip(&[
                                r.get(anchor).row(i).as_slice().unwrap(),
                                r.get(o[0]).row(j).as_slice().unwrap(),
                                r.get(o[1]).row(k).as_slice().unwrap(),
                            ])
                            .unwrap();
                        assert!((l.logits[[i, j * n + k]] - v).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn on2_single_sample() {
        let r = RepresentationSet::new(vec![array![[1.0]], array![[2.0]], array![[3.0]]]).unwrap();
        let l = build_logits_on2(1, &r, 1.0).unwrap();
        assert_eq!(l.logits, array![[6.0]]);
        assert_eq!(l.targets, vec![0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let r = hand_reps();
        assert!(matches!(
            build_logits_on(0, &r, &[vec![0, 0], vec![0, 1]], 1.0),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(build_logits_on(0, &r, &[vec![0, 1]], 1.0).is_err());
        assert!(build_logits_on(0, &r, &[vec![0, 1], vec![1, 0]], 0.0).is_err());
        let two = RepresentationSet::new(vec![r.get(0).clone(), r.get(1).clone()]).unwrap();
        assert!(build_logits_on2(0, &two, 1.0).is_err());
    }

    #[test]
    fn strategy_names() {
        assert_eq!("on".parse::<NegativeStrategy>().unwrap(), NegativeStrategy::OnPermute);
        assert_eq!("O(N^2)".parse::<NegativeStrategy>().unwrap(), NegativeStrategy::OnSquared);
        assert_eq!(NegativeStrategy::OnSquared.to_string(), "on2");
        assert!("x".parse::<NegativeStrategy>().is_err());
    }
}
