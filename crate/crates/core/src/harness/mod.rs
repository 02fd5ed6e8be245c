//! Loss functions, lemma checks, summary statistics and the Monte-Carlo runner.

mod experiment;
mod lemmas;
mod loss;
pub mod stats;

pub use experiment::{
    configure_threads, run_experiment, EstimatorKind, ExperimentConfig, ExperimentReport, ExperimentRow, Flag,
    InstanceSpec, ObservationSpec, REPORT_COLUMNS,
};
pub use lemmas::{
    block_count, energy_capture, group_variance, loss_general, population_blocks, sandwich, verify_lemmas,
    BlockCountReport, EnergyReport, LemmaFlags, LossBoundReport, SandwichReport,
};
pub use loss::{lerr_loss, linf_loss, matrix_loss, perm_loss, random_guess_loss};
