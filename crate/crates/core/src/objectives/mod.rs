//! Scoring and contrastive losses over batches of representations.
//!
//! Every loss returns its value together with the gradient with respect to
//! each modality's representations and to the logit scale, so the training
//! loop only has to chain through the encoders.

mod clip;
mod contrast;
mod logits;
mod mip;
mod symile;

pub use clip::{clip_pair_loss, pairwise_clip_loss, pairwise_clip_loss_scaled};
pub use logits::{build_logits_on, build_logits_on2, LogitsMatrix, NegativeStrategy};
pub use mip::mip;
pub use symile::{draw_negatives, symile_loss, symile_loss_given, Negatives};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Per-modality representations of one batch, all `N x D`.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSet {
    reps: Vec<Array2<f64>>,
}

impl RepresentationSet {
    pub fn new(reps: Vec<Array2<f64>>) -> Result<Self> {
        let Some(first) = reps.first() else {
            return Err(Error::ShapeMismatch("no modalities".into()));
        };
        let dim = first.dim();
        if let Some(r) = reps.iter().find(|r| r.dim() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "representations {:?} and {:?} differ in shape",
                dim,
                r.dim()
            )));
        }
        // Kernels rely on contiguous rows.
        let reps = reps
            .into_iter()
            .map(|r| if r.is_standard_layout() { r } else { r.as_standard_layout().into_owned() })
            .collect();
        Ok(Self { reps })
    }

    pub fn num_modalities(&self) -> usize {
        self.reps.len()
    }

    /// Batch size `N`.
    pub fn len(&self) -> usize {
        self.reps[0].nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.reps[0].ncols()
    }

    pub fn get(&self, m: usize) -> &Array2<f64> {
        &self.reps[m]
    }

    pub fn as_slice(&self) -> &[Array2<f64>] {
        &self.reps
    }
}

/// Loss value, its breakdown, and gradients.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    /// Per anchor for Symile, per direction for one CLIP pair, per pair for
    /// pairwise CLIP.
    pub per_term: Vec<f64>,
    /// `dL/dr_m` for every modality.
    pub rep_grads: Vec<Array2<f64>>,
    /// `dL/d(scale)`.
    pub scale_grad: f64,
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("logit scale {scale} must be positive and finite")));
    }
    Ok(())
}
