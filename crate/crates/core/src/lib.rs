//! Symile: a contrastive objective that targets the total correlation of any
//! number of modalities, together with an exact discrete information oracle
//! used to check it.
//!
//! * [`oracle`] exact entropies, (conditional) mutual information, total
//!   correlation, the optimal scorer and the contrastive bound.
//! * [`synthdata`] seeded generators for the XOR and mixture datasets.
//! * [`numcore`] affine encoders, softmax cross-entropy, AdamW, finite differences.
//! * [`objectives`] multilinear inner product, CLIP and Symile losses with gradients.
//! * [`traineval`] training, zero-shot retrieval, calibration, probes, diagnostics.

pub mod error;
pub mod fmt;
pub mod hash;
pub mod numcore;
pub mod objectives;
pub mod oracle;
pub mod rng;
pub mod synthdata;
pub mod traineval;

pub use error::{Error, Result};
pub use numcore::{AffineEncoder, ModelParams, OptimizerState};
pub use objectives::{LogitsMatrix, NegativeStrategy, RepresentationSet};
pub use oracle::{IMode, InfoReport, JointTable, TabularScorer};
pub use synthdata::{Dataset, SplitSpec};
pub use traineval::{Checkpoint, Objective, TrainConfig};
