use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::table::{JointTable, MAX_VARIABLES};
use crate::error::{Error, Result};

/// How the mixture switch `i` is shared across the coordinates of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IMode {
    /// One switch per sample, applied to every coordinate.
    #[default]
    Shared,
    /// An independent switch per coordinate.
    PerCoordinate,
}

impl fmt::Display for IMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IMode::Shared => "shared",
            IMode::PerCoordinate => "per_coordinate",
        })
    }
}

impl FromStr for IMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shared" => Ok(IMode::Shared),
            "per_coordinate" | "per-coordinate" => Ok(IMode::PerCoordinate),
            other => Err(Error::InvalidArgument(format!("unknown i-mode `{other}`"))),
        }
    }
}

/// Variable names of the three-modality binary tables: `a, b, c` for one
/// coordinate, `a1..ad, b1..bd, c1..cd` otherwise.
pub fn modality_var_names(modality: &str, dims: usize) -> Vec<String> {
    if dims == 1 {
        vec![modality.to_string()]
    } else {
        (1..=dims).map(|j| format!("{modality}{j}")).collect()
    }
}

/// `a, b` fair bits and `c = a XOR b`.
pub fn build_xor1d_table() -> JointTable {
    let mut probs = vec![0.0; 8];
    for a in 0..2usize {
        for b in 0..2usize {
            let c = a ^ b;
            probs[a + 2 * b + 4 * c] = 0.25;
        }
    }
    JointTable::binary(&["a", "b", "c"], probs).expect("xor table is valid")
}

/// Exact joint of the mixture process `c_j = (a_j XOR b_j)^i * a_j^(1-i)` with
/// `a, b` uniform on `{0,1}^dims` and `i ~ Bernoulli(p_hat)`.
pub fn build_synth_table(p_hat: f64, dims: usize, mode: IMode) -> Result<JointTable> {
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::InvalidArgument(format!("p_hat {p_hat} outside [0, 1]")));
    }
    if dims == 0 {
        return Err(Error::InvalidArgument("dims must be at least 1".into()));
    }
    if 3 * dims > MAX_VARIABLES {
        return Err(Error::Capacity {
            vars: 3 * dims,
            max: MAX_VARIABLES,
        });
    }
    let width = 1usize << dims;
    let full = width - 1;
    let base = 1.0 / (width * width) as f64;

    // Distribution of the per-coordinate switch mask.
    let switches: Vec<(usize, f64)> = match mode {
        IMode::Shared => vec![(0, 1.0 - p_hat), (full, p_hat)],
        IMode::PerCoordinate => (0..width)
            .map(|mask| {
                let on = mask.count_ones() as i32;
                (mask, p_hat.powi(on) * (1.0 - p_hat).powi(dims as i32 - on))
            })
            .collect(),
    };

    let mut probs = vec![0.0; width * width * width];
    for a in 0..width {
        for b in 0..width {
            for &(mask, w) in &switches {
                if w == 0.0 {
                    continue;
                }
                let c = ((a ^ b) & mask) | (a & !mask & full);
                probs[a + width * b + width * width * c] += base * w;
            }
        }
    }

    let mut names = modality_var_names("a", dims);
    names.extend(modality_var_names("b", dims));
    names.extend(modality_var_names("c", dims));
    JointTable::new(names, vec![2; 3 * dims], probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_table_support() {
        let t = build_xor1d_table();
        assert_eq!(t.prob(&[0, 0, 0]), 0.25);
        assert_eq!(t.prob(&[1, 1, 1]), 0.0);
        assert_eq!(t.prob(&[1, 1, 0]), 0.25);
        for v in ["a", "b", "c"] {
            let m = t.marginal(&[v]).unwrap();
            assert_eq!(m.probs(), &[0.5, 0.5]);
        }
    }

    #[test]
    fn synth_endpoints() {
        let t1 = build_synth_table(1.0, 1, IMode::Shared).unwrap();
        assert_eq!(t1, build_xor1d_table());

        let t0 = build_synth_table(0.0, 1, IMode::Shared).unwrap();
        let mut p_eq = 0.0;
        for s in 0..t0.num_states() {
            let d = t0.decode(s);
            if d[2] == d[0] {
                p_eq += t0.probs()[s];
            }
        }
        assert_eq!(p_eq, 1.0);
    }

    #[test]
    fn synth_half_gives_three_quarters_agreement() {
        // Oracle: enumerate (a, b, i) with weights 1/4 * P(i).
        let p_hat = 0.5;
        let mut expected = 0.0;
        for a in 0..2u8 {
            for b in 0..2u8 {
                for i in 0..2u8 {
                    let w = 0.25 * if i == 1 { p_hat } else { 1.0 - p_hat };
                    let c = if i == 1 { a ^ b } else { a };
                    if c == a {
                        expected += w;
                    }
                }
            }
        }
        assert_eq!(expected, 0.75);

        let t = build_synth_table(p_hat, 1, IMode::Shared).unwrap();
        let c_eq_a: f64 = (0..t.num_states())
            .filter(|&s| {
                let d = t.decode(s);
                d[0] == d[2]
            })
            .map(|s| t.probs()[s])
            .sum();
        assert!((c_eq_a - expected).abs() < 1e-15);
    }

    #[test]
    fn synth_capacity_and_names() {
        assert!(matches!(
            build_synth_table(0.5, 6, IMode::Shared),
            Err(Error::Capacity { .. })
        ));
        let t = build_synth_table(0.3, 5, IMode::PerCoordinate).unwrap();
        assert_eq!(t.num_states(), 1 << 15);
        assert_eq!(t.var_names()[0], "a1");
        assert_eq!(t.var_names()[14], "c5");
        assert!(build_synth_table(1.5, 1, IMode::Shared).is_err());
    }

    #[test]
    fn modes_agree_in_one_dimension() {
        for p in [0.0, 0.2, 0.7, 1.0] {
            let s = build_synth_table(p, 1, IMode::Shared).unwrap();
            let c = build_synth_table(p, 1, IMode::PerCoordinate).unwrap();
            for (x, y) in s.probs().iter().zip(c.probs()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
