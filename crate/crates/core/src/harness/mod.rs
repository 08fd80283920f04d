//! Scenarios, run configuration, diagnostics and studies.

pub mod config;
mod convergence;
mod run;
mod scenario;
mod stats;

pub use config::RunConfig;
pub use convergence::{convergence_study, fitted_order, relative_mh_error, ConvergenceRow};
pub use run::{
    list_snapshots, read_diagnostics, resolve_dt, run, run_model, snapshot_container, snapshot_from_container,
    snapshot_path, step_count, CourantInfo, DiagnosticsRecord, RunOptions, RunOutput,
};
pub use scenario::{
    basin_mesh, bowl_depth, build_mesh, geostrophic_velocity, initial_state, model_config, setup, OMEGA,
};
pub use stats::{compare_statistics, statistics, statistics_from_dir, weighted_l2, FlowStatistics, StatsAccumulator};
