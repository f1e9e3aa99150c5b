//! Small dense numerics: affine encoders with unit-norm projection,
//! softmax cross-entropy, AdamW, and a central-difference gradient checker.

mod encoder;
mod gradcheck;
mod optim;
mod softmax;

pub use encoder::{AffineEncoder, EncodeCache};
pub use gradcheck::{finite_diff_grad, relative_error, GradCheckReport, RELATIVE_ERROR_FLOOR};
pub use optim::{AdamWConfig, OptimizerState};
pub use softmax::{log_sum_exp, mean_row_cross_entropy, softmax_cross_entropy};

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One encoder per modality plus the log-temperature `t`; logits are scaled
/// by `exp(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoders: Vec<AffineEncoder>,
    pub temperature_log: f64,
    /// Encoder inputs carry a trailing 0/1 "modality missing" column.
    pub missing_indicator: bool,
    /// Separate log-temperatures for pairwise CLIP, one per modality pair in
    /// lexicographic order. Empty means every pair uses `temperature_log`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pair_temperature_logs: Vec<f64>,
}

/// Number of unordered modality pairs.
pub fn num_pairs(modalities: usize) -> usize {
    modalities * modalities.saturating_sub(1) / 2
}

impl ModelParams {
    /// `input_dims` are the raw modality widths (without the indicator column).
    pub fn init<R: Rng + ?Sized>(
        input_dims: &[usize],
        d_out: usize,
        normalize: bool,
        temperature_log: f64,
        missing_indicator: bool,
        rng: &mut R,
    ) -> Self {
        let extra = usize::from(missing_indicator);
        Self {
            encoders: input_dims
                .iter()
                .map(|&d| AffineEncoder::init(d + extra, d_out, normalize, rng))
                .collect(),
            temperature_log,
            missing_indicator,
            pair_temperature_logs: Vec::new(),
        }
    }

    /// Gives every modality pair its own log-temperature, each starting at
    /// the shared value.
    pub fn with_pair_temperatures(mut self) -> Self {
        self.pair_temperature_logs = vec![self.temperature_log; num_pairs(self.encoders.len())];
        self
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.encoders.first() else {
            return Err(Error::ShapeMismatch("model has no encoders".into()));
        };
        if self.encoders.iter().any(|e| e.d_out() != first.d_out()) {
            return Err(Error::ShapeMismatch("encoders disagree on output width".into()));
        }
        if !self.temperature_log.is_finite() || self.pair_temperature_logs.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("temperature".into()));
        }
        if !self.pair_temperature_logs.is_empty() && self.pair_temperature_logs.len() != num_pairs(self.encoders.len()) {
            return Err(Error::ShapeMismatch(format!(
                "{} pair temperatures for {} modalities",
                self.pair_temperature_logs.len(),
                self.encoders.len()
            )));
        }
        Ok(())
    }

    pub fn num_modalities(&self) -> usize {
        self.encoders.len()
    }

    pub fn d_out(&self) -> usize {
        self.encoders[0].d_out()
    }

    pub fn scale(&self) -> f64 {
        self.temperature_log.exp()
    }

    /// Per-pair logit scales, or `None` when the shared one applies.
    pub fn pair_scales(&self) -> Option<Vec<f64>> {
        (!self.pair_temperature_logs.is_empty()).then(|| self.pair_temperature_logs.iter().map(|t| t.exp()).collect())
    }

    /// Raw input width of modality `m`.
    pub fn raw_input_dims(&self, m: usize) -> usize {
        self.encoders[m].d_in() - usize::from(self.missing_indicator)
    }

    /// Encoder input for raw rows `x`: appends the missing-indicator column
    /// (1 where `observed[i]` is false) when the model uses one.
    pub fn encoder_input(&self, m: usize, x: ArrayView2<f64>, observed: Option<&[bool]>) -> Result<Array2<f64>> {
        if x.ncols() != self.raw_input_dims(m) {
            return Err(Error::ShapeMismatch(format!(
                "modality {m} expects {} raw inputs, got {}",
                self.raw_input_dims(m),
                x.ncols()
            )));
        }
        if !self.missing_indicator {
            return Ok(x.to_owned());
        }
        let mut out = Array2::zeros((x.nrows(), x.ncols() + 1));
        out.slice_mut(ndarray::s![.., ..x.ncols()]).assign(&x);
        if let Some(obs) = observed {
            for (i, &o) in obs.iter().enumerate() {
                if !o {
                    out[[i, x.ncols()]] = 1.0;
                }
            }
        }
        Ok(out)
    }

    /// Representations of raw rows of modality `m`.
    pub fn encode(&self, m: usize, x: ArrayView2<f64>, observed: Option<&[bool]>) -> Result<Array2<f64>> {
        let input = self.encoder_input(m, x, observed)?;
        self.encoders[m].forward_batch(input.view())
    }

    /// `(name, length)` of every parameter block, in flattening order.
    pub fn blocks(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        for (m, e) in self.encoders.iter().enumerate() {
            out.push((format!("W{m}"), e.weight.len()));
            out.push((format!("b{m}"), e.bias.len()));
        }
        out.push(("t".into(), 1));
        if !self.pair_temperature_logs.is_empty() {
            out.push(("t_pairs".into(), self.pair_temperature_logs.len()));
        }
        out
    }

    /// Weight decay applies to encoder weights and biases, never to `t`.
    pub fn decay_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; 2 * self.encoders.len()];
        mask.push(false);
        if !self.pair_temperature_logs.is_empty() {
            mask.push(false);
        }
        mask
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for e in &mut self.encoders {
            out.push(e.weight.as_slice_mut().expect("standard layout"));
            out.push(e.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(std::slice::from_mut(&mut self.temperature_log));
        if !self.pair_temperature_logs.is_empty() {
            out.push(&mut self.pair_temperature_logs);
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in &self.encoders {
            out.extend(e.weight.iter());
            out.extend(e.bias.iter());
        }
        out.push(self.temperature_log);
        out.extend(&self.pair_temperature_logs);
        out
    }

    pub fn unflatten(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.blocks().iter().map(|b| b.1).sum();
        if flat.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "expected {total} parameters, got {}",
                flat.len()
            )));
        }
        let mut it = flat.iter().copied();
        for s in self.param_slices_mut() {
            for v in s.iter_mut() {
                *v = it.next().expect("length checked");
            }
        }
        Ok(())
    }
}

/// Gradient of a scalar loss with respect to [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub temperature_log: f64,
    pub pair_temperature_logs: Vec<f64>,
}

impl ModelGrads {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Self {
            weights: p.encoders.iter().map(|e| Array2::zeros(e.weight.raw_dim())).collect(),
            biases: p.encoders.iter().map(|e| Array1::zeros(e.bias.len())).collect(),
            temperature_log: 0.0,
            pair_temperature_logs: vec![0.0; p.pair_temperature_logs.len()],
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(std::slice::from_ref(&self.temperature_log));
        if !self.pair_temperature_logs.is_empty() {
            out.push(&self.pair_temperature_logs);
        }
        out
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn is_finite(&self) -> bool {
        self.temperature_log.is_finite() && self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}
