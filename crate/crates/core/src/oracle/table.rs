use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of variables a table may hold (2^15 binary states).
pub const MAX_VARIABLES: usize = 15;

const SUM_TOLERANCE: f64 = 1e-12;

/// Exact joint distribution over a small set of named discrete variables.
///
/// States use a mixed-radix little-endian encoding: the first variable varies
/// fastest, so `index = d0 + a0 * (d1 + a1 * (d2 + ...))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    var_names: Vec<String>,
    arities: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(var_names: Vec<String>, arities: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if var_names.is_empty() {
            return Err(Error::InvalidTable("no variables".into()));
        }
        if var_names.len() > 64 {
            return Err(Error::Capacity {
                vars: var_names.len(),
                max: 64,
            });
        }
        if var_names.len() != arities.len() {
            return Err(Error::InvalidTable(format!(
                "{} names for {} arities",
                var_names.len(),
                arities.len()
            )));
        }
        for (i, name) in var_names.iter().enumerate() {
            if var_names[..i].contains(name) {
                return Err(Error::InvalidTable(format!("duplicate variable `{name}`")));
            }
        }
        if arities.iter().any(|&a| a == 0) {
            return Err(Error::InvalidTable("zero arity".into()));
        }
        let states = arities
            .iter()
            .try_fold(1usize, |acc, &a| acc.checked_mul(a))
            .ok_or(Error::Capacity {
                vars: arities.len(),
                max: MAX_VARIABLES,
            })?;
        if probs.len() != states {
            return Err(Error::InvalidTable(format!(
                "{} probabilities for {states} states",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidTable(format!("bad probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidTable(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            var_names,
            arities,
            probs,
        })
    }

    /// Table over binary variables.
    pub fn binary(names: &[&str], probs: Vec<f64>) -> Result<Self> {
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            vec![2; names.len()],
            probs,
        )
    }

    /// Product of independent fair bits.
    pub fn independent_fair_bits(names: &[&str]) -> Result<Self> {
        let n = 1usize << names.len();
        Self::binary(names, vec![1.0 / n as f64; n])
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.var_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Variable positions for a list of names, rejecting unknown names and repeats.
    pub fn indices_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.index_of(n.as_ref())?;
            if out.contains(&i) {
                return Err(Error::OverlappingGroups(n.as_ref().to_string()));
            }
            out.push(i);
        }
        Ok(out)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.arities.len());
        let mut s = 1;
        for &a in &self.arities {
            strides.push(s);
            s *= a;
        }
        strides
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.arities.len());
        digits
            .iter()
            .zip(&self.arities)
            .rev()
            .fold(0, |acc, (&d, &a)| acc * a + d)
    }

    pub fn decode(&self, mut state: usize) -> Vec<usize> {
        self.arities
            .iter()
            .map(|&a| {
                let d = state % a;
                state /= a;
                d
            })
            .collect()
    }

    pub fn prob(&self, digits: &[usize]) -> f64 {
        self.probs[self.encode(digits)]
    }

    /// Marginal over `vars`, with variables in the order given.
    pub fn marginal<S: AsRef<str>>(&self, vars: &[S]) -> Result<JointTable> {
        if vars.is_empty() {
            return Err(Error::EmptyGroup);
        }
        let idx = self.indices_of(vars)?;
        let arities: Vec<usize> = idx.iter().map(|&i| self.arities[i]).collect();
        let size: usize = arities.iter().product();
        let mut probs = vec![0.0; size];
        for (state, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            probs[project(state, &self.arities, &idx, &arities)] += p;
        }
        Ok(JointTable {
            var_names: idx.iter().map(|&i| self.var_names[i].clone()).collect(),
            arities,
            probs,
        })
    }
}

/// Index in the marginal over `idx` (with arities `sub_arities`) of a full state.
pub(crate) fn project(state: usize, arities: &[usize], idx: &[usize], sub_arities: &[usize]) -> usize {
    let mut digits = [0usize; 64];
    let mut s = state;
    for (i, &a) in arities.iter().enumerate() {
        digits[i] = s % a;
        s /= a;
    }
    idx.iter()
        .zip(sub_arities)
        .rev()
        .fold(0, |acc, (&i, &a)| acc * a + digits[i])
}
