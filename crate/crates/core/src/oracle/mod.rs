//! Exact information theory on enumerable discrete joints.

mod builders;
mod measures;
mod scorer;
mod table;

pub use builders::{build_synth_table, build_xor1d_table, modality_var_names, IMode};
pub use measures::{
    abc_reports, conditional_mi, entropy, mutual_information, total_correlation, InfoReport, Quantity,
};
pub use scorer::{
    bound_value, optimal_scorer, optimal_scorer_for, BoundEstimate, ContrastiveBatchSampler,
    Partition, TabularScorer,
};
#[cfg(test)]
pub(crate) use scorer::batch_term;
pub use table::{JointTable, MAX_VARIABLES};
