//! Library half of the experiment runner: configuration parsing and the
//! orchestration that the `levy-sde` binary wraps.

pub mod config;
pub mod runner;

pub use config::{ConfigErrors, ExperimentConfig};
pub use runner::{
    emit_plot_data, run_experiment, RunOutcome, EXIT_CONFIG, EXIT_DIAGNOSTIC_FAILED, EXIT_OK,
    EXIT_SOLVER_DIVERGED,
};
