//! Scenario configuration, execution and result collation.

mod config;
mod run;

pub use config::{
    inverse_source, Discretization, FieldConfig, Method, OutputConfig, PerturbationConfig, Preset, Resolved,
    ScenarioConfig, SolverConfig, TargetKind,
};
pub use run::{
    append_rows, collate_tables, galerkin_forward, galerkin_system, generate_inverse_target, read_rows,
    run_scenario, run_sweep, solve_collocation, solve_galerkin, solve_galerkin_with, CollocRun, FieldSummary,
    GalerkinRun, ResultRow,
};
