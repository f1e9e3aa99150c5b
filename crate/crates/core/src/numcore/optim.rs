//! AdamW: Adam with weight decay decoupled from the adaptive step.
//!
//! ```text
//! θ ← θ · (1 − lr·λ)                      (only for decayed parameters)
//! m ← β1·m + (1 − β1)·g
//! v ← β2·v + (1 − β2)·g²
//! θ ← θ − (lr / (1 − β1^t)) · m / (sqrt(v) / sqrt(1 − β2^t) + ε)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl OptimizerState {
    /// Zeroed moments for parameter blocks of the given lengths.
    pub fn new(config: AdamWConfig, block_lens: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            first_moment: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: block_lens.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update. `decay[k]` says whether block `k` receives weight decay.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], decay: &[bool]) -> Result<()> {
        let blocks = self.first_moment.len();
        if params.len() != blocks || grads.len() != blocks || decay.len() != blocks {
            return Err(Error::ShapeMismatch(format!(
                "optimizer tracks {blocks} blocks, got {} params, {} grads, {} decay flags",
                params.len(),
                grads.len(),
                decay.len()
            )));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.first_moment[k].len() || g.len() != p.len() {
                return Err(Error::ShapeMismatch(format!(
                    "block {k}: {} params, {} grads, {} moments",
                    p.len(),
                    g.len(),
                    self.first_moment[k].len()
                )));
            }
        }

        let AdamWConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2_sqrt = (1.0 - beta2.powi(t)).sqrt();
        let step_size = lr / bc1;
        let shrink = 1.0 - lr * weight_decay;

        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first_moment[k];
            let v = &mut self.second_moment[k];
            for i in 0..p.len() {
                if decay[k] {
                    p[i] *= shrink;
                }
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let denom = v[i].sqrt() / bc2_sqrt + eps;
                p[i] -= step_size * m[i] / denom;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(cfg: AdamWConfig, theta: &mut [f64], grad: &[f64], decay: bool) -> OptimizerState {
        let mut s = OptimizerState::new(cfg, &[theta.len()]);
        s.step(&mut [theta], &[grad], &[decay]).unwrap();
        s
    }

    #[test]
    fn zero_gradient_without_decay_is_noop() {
        let cfg = AdamWConfig {
            lr: 0.1,
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut theta = [1.5, -2.0];
        run(cfg, &mut theta, &[0.0, 0.0], true);
        assert_eq!(theta, [1.5, -2.0]);
    }

    #[test]
    fn zero_gradient_with_decay_shrinks() {
        let cfg = AdamWConfig {
            lr: 0.1,
            weight_decay: 0.01,
            ..Default::default()
        };
        let mut theta = [1.5, -2.0];
        run(cfg, &mut theta, &[0.0, 0.0], true);
        assert_eq!(theta, [1.5 * (1.0 - 0.1 * 0.01), -2.0 * (1.0 - 0.1 * 0.01)]);

        let mut excluded = [1.5];
        run(cfg, &mut excluded, &[0.0], false);
        assert_eq!(excluded, [1.5]);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        // After bias correction m̂ = g and v̂ = g², so the step is lr·g / (|g| + ε).
        let cfg = AdamWConfig {
            lr: 0.05,
            weight_decay: 0.0,
            ..Default::default()
        };
        for g in [0.3, -2.0, 1e-6] {
            let mut theta = [1.0];
            run(cfg, &mut theta, &[g], true);
            let expected = 1.0 - 0.05 * g / (g.abs() + 1e-8);
            assert!((theta[0] - expected).abs() < 1e-12, "g={g}: {} vs {expected}", theta[0]);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut s = OptimizerState::new(AdamWConfig::default(), &[2]);
        let mut p = [0.0; 3];
        assert!(s.step(&mut [&mut p], &[&[0.0; 3]], &[true]).is_err());
        let mut p2 = [0.0; 2];
        assert!(s.step(&mut [&mut p2], &[&[0.0; 2]], &[]).is_err());
        assert_eq!(s.step, 0);
    }
}
