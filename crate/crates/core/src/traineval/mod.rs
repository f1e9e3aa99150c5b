//! Training with validation-loss checkpointing, zero-shot retrieval,
//! calibrated conditionals, sufficient-statistic probes, and numerical
//! diagnostics of the contrastive bound.

mod calibration;
mod config;
mod diagnostics;
mod model;
mod probe;
mod retrieval;
mod train;

pub use calibration::{calibrated_conditional, disease_fixture, rank_with_prior, DiseaseFixture};
pub use config::{Objective, TrainConfig};
pub use diagnostics::{
    bound_tightness_report, gradcheck_case, gradient_check, partition_total_correlation, recover_optimal_scorer,
    BoundRow, GradCheckCase, RecoveryConfig, ScorerRecovery,
};
pub use model::{batch_loss, encode_all, loss_value, BatchLoss};
pub use probe::{sufficient_statistic_probe, ProbeConfig, ProbeReport, ProbeTarget};
pub use retrieval::{
    all_binary_vectors, argmax, bootstrap_accuracy, classify_b, classify_target, clip_candidate_scores,
    symile_candidate_scores, weighted_clip_candidate_scores, BootstrapReport, RetrievalResult, ScorerKind,
};
pub use train::{init_params, train, validation_loss, Checkpoint, EpochRecord, TrainOutcome};
