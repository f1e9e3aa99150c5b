//! Entropy, mutual information, conditional mutual information and total
//! correlation by exact summation. Everything is in nats.
//!
//! Divergence-type quantities are summed directly as `Σ p log(p / q)` rather
//! than as differences of entropies, so an exactly factorizing table gives an
//! exact zero.

use serde::{Deserialize, Serialize};

use super::builders::modality_var_names;
use super::table::JointTable;
use crate::error::{Error, Result};

fn check_groups<S: AsRef<str>>(groups: &[&[S]]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for g in groups {
        if g.is_empty() {
            return Err(Error::EmptyGroup);
        }
        for v in g.iter() {
            let v = v.as_ref();
            if seen.contains(&v) {
                return Err(Error::OverlappingGroups(v.to_string()));
            }
            seen.push(v);
        }
    }
    Ok(())
}

fn concat<S: AsRef<str>>(groups: &[&[S]]) -> Vec<String> {
    groups
        .iter()
        .flat_map(|g| g.iter().map(|s| s.as_ref().to_string()))
        .collect()
}

/// Index into the marginal over the digit positions `pos` (in that order).
fn sub_index(digits: &[usize], arities: &[usize], pos: &[usize]) -> usize {
    pos.iter()
        .rev()
        .fold(0, |acc, &i| acc * arities[i] + digits[i])
}

fn decode_into(state: usize, arities: &[usize], digits: &mut [usize]) {
    let mut s = state;
    for (d, &a) in digits.iter_mut().zip(arities) {
        *d = s % a;
        s /= a;
    }
}

/// Shannon entropy of the marginal over `vars`.
pub fn entropy<S: AsRef<str>>(t: &JointTable, vars: &[S]) -> Result<f64> {
    check_groups(&[vars])?;
    let m = t.marginal(vars)?;
    Ok(-m
        .probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>())
}

/// `I(X; Y)`.
pub fn mutual_information<S: AsRef<str>>(t: &JointTable, x: &[S], y: &[S]) -> Result<f64> {
    total_correlation(t, &[x, y])
}

/// `I(X; Y | Z)`; an empty `Z` gives the unconditional mutual information.
pub fn conditional_mi<S: AsRef<str>>(
    t: &JointTable,
    x: &[S],
    y: &[S],
    z: &[S],
) -> Result<f64> {
    if z.is_empty() {
        return mutual_information(t, x, y);
    }
    check_groups(&[x, y, z])?;
    let (nx, ny, nz) = (x.len(), y.len(), z.len());
    let joint = t.marginal(&concat(&[x, y, z]))?;
    let xz_vars = concat(&[x, z]);
    let yz_vars = concat(&[y, z]);
    let p_xz = joint.marginal(&xz_vars)?;
    let p_yz = joint.marginal(&yz_vars)?;
    let p_z = joint.marginal(z)?;

    let xs: Vec<usize> = (0..nx).collect();
    let ys: Vec<usize> = (nx..nx + ny).collect();
    let zs: Vec<usize> = (nx + ny..nx + ny + nz).collect();
    let xz_pos: Vec<usize> = xs.iter().chain(&zs).copied().collect();
    let yz_pos: Vec<usize> = ys.iter().chain(&zs).copied().collect();

    let arities = joint.arities();
    let mut digits = vec![0; arities.len()];
    let mut total = 0.0;
    for (s, &p) in joint.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        decode_into(s, arities, &mut digits);
        let pxz = p_xz.probs()[sub_index(&digits, arities, &xz_pos)];
        let pyz = p_yz.probs()[sub_index(&digits, arities, &yz_pos)];
        let pz = p_z.probs()[sub_index(&digits, arities, &zs)];
        total += p * ((p * pz) / (pxz * pyz)).ln();
    }
    Ok(total)
}

/// `TC(G_1, ..., G_M) = KL(p(G_1..G_M) || Π p(G_m))` for disjoint groups.
pub fn total_correlation<S: AsRef<str>>(t: &JointTable, groups: &[&[S]]) -> Result<f64> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument(
            "total correlation needs at least two groups".into(),
        ));
    }
    check_groups(groups)?;
    let joint = t.marginal(&concat(groups))?;
    let margs = groups
        .iter()
        .map(|g| joint.marginal(g))
        .collect::<Result<Vec<_>>>()?;

    // Each group occupies a contiguous digit range of the concatenated table,
    // so its marginal index is (state / stride) % size.
    let mut strides = Vec::with_capacity(groups.len());
    let mut stride = 1;
    for m in &margs {
        strides.push(stride);
        stride *= m.num_states();
    }

    let mut total = 0.0;
    for (s, &p) in joint.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let q: f64 = margs
            .iter()
            .zip(&strides)
            .map(|(m, &st)| m.probs()[(s / st) % m.num_states()])
            .product();
        total += p * (p / q).ln();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Entropy,
    Mi,
    Cmi,
    Tc,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Entropy => "entropy",
            Quantity::Mi => "mi",
            Quantity::Cmi => "cmi",
            Quantity::Tc => "tc",
        }
    }
}

/// One computed information quantity.
///
/// Group layout per kind: entropy `[vars]`, mi `[X, Y]`, cmi `[X, Y, Z]`,
/// tc `[G_1, ..., G_M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub kind: Quantity,
    pub groups: Vec<Vec<String>>,
    pub value: f64,
}

impl InfoReport {
    pub fn compute(t: &JointTable, kind: Quantity, groups: Vec<Vec<String>>) -> Result<Self> {
        let refs: Vec<&[String]> = groups.iter().map(|g| g.as_slice()).collect();
        let arity_err = |n: usize| {
            Error::InvalidArgument(format!("{} takes {n} groups, got {}", kind.as_str(), refs.len()))
        };
        let value = match kind {
            Quantity::Entropy => {
                let [g] = refs.as_slice() else { return Err(arity_err(1)) };
                entropy(t, g)?
            }
            Quantity::Mi => {
                let [x, y] = refs.as_slice() else { return Err(arity_err(2)) };
                mutual_information(t, x, y)?
            }
            Quantity::Cmi => {
                let [x, y, z] = refs.as_slice() else { return Err(arity_err(3)) };
                conditional_mi(t, x, y, z)?
            }
            Quantity::Tc => total_correlation(t, &refs)?,
        };
        Ok(Self { kind, groups, value })
    }

    /// `a;b|c` style label, variables within a group joined by `+`.
    pub fn group_spec(&self) -> String {
        let g: Vec<String> = self.groups.iter().map(|g| g.join("+")).collect();
        match self.kind {
            Quantity::Cmi => format!("{};{}|{}", g[0], g[1], g[2]),
            _ => g.join(";"),
        }
    }

    pub fn value_bits(&self) -> f64 {
        self.value / std::f64::consts::LN_2
    }
}

/// The three pairwise MIs, the three conditional MIs and the total
/// correlation of modalities `a`, `b`, `c`, each `dims` binary variables wide.
pub fn abc_reports(t: &JointTable, dims: usize) -> Result<Vec<InfoReport>> {
    let [a, b, c] = ["a", "b", "c"].map(|m| modality_var_names(m, dims));
    let specs: [(Quantity, Vec<Vec<String>>); 7] = [
        (Quantity::Mi, vec![a.clone(), b.clone()]),
        (Quantity::Mi, vec![b.clone(), c.clone()]),
        (Quantity::Mi, vec![a.clone(), c.clone()]),
        (Quantity::Cmi, vec![a.clone(), b.clone(), c.clone()]),
        (Quantity::Cmi, vec![b.clone(), c.clone(), a.clone()]),
        (Quantity::Cmi, vec![a.clone(), c.clone(), b.clone()]),
        (Quantity::Tc, vec![a, b, c]),
    ];
    specs
        .into_iter()
        .map(|(kind, groups)| InfoReport::compute(t, kind, groups))
        .collect()
}
