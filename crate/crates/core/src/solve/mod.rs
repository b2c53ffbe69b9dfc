//! Iterative solvers for the one-shot systems: Krylov iterations, the
//! mean-based block preconditioner, a block-diagonal preconditioner for the
//! saddle system and collective-smoothing multigrid.

mod krylov;
mod meanbased;
mod multigrid;

use std::fs::OpenOptions;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use krylov::{krylov_solve, krylov_solve_from, KrylovConfig, KrylovMethod, SolveReport};
pub use meanbased::{MeanBasedPreconditioner, MeanStiffnessPreconditioner, PairSolver, SaddleBlockPreconditioner};
pub use multigrid::{MgConfig, MgHierarchy};

use crate::error::Result;
use crate::fem::FeSpace;
use crate::gpc::GpcBasis;
use crate::oneshot::{reduced_operator, saddle_operator, ControlSpec, GalerkinSystem, Regularization};
use crate::randfield::KlField;

/// Preconditioner choice for the Galerkin systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreconditionerKind {
    None,
    MeanBased,
    Multigrid,
    /// Block-diagonal SPD preconditioner of the saddle system.
    BlockDiagonal,
}

impl PreconditionerKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::MeanBased => "meanbased",
            Self::Multigrid => "multigrid",
            Self::BlockDiagonal => "blockdiagonal",
        }
    }
}

/// Multigrid hierarchy for the Galerkin system of `spec` (reduced for L2,
/// saddle for H1), re-assembled on every coarse mesh.
pub fn galerkin_hierarchy(
    spec: &ControlSpec,
    field: &KlField,
    basis: &GpcBasis,
    space: &FeSpace,
    cfg: MgConfig,
) -> Result<MgHierarchy> {
    MgHierarchy::build(space, cfg, &|s: &FeSpace| {
        let sys = GalerkinSystem::new(s.clone(), field, basis.clone())?;
        match spec.regularization {
            Regularization::L2 => reduced_operator(spec, &sys),
            Regularization::H1 => saddle_operator(spec, &sys),
        }
    })
}

/// One row of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRow {
    pub scenario: String,
    pub method: String,
    pub preconditioner: String,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
}

impl RunLogRow {
    pub fn new(scenario: &str, method: &str, preconditioner: &str, report: &SolveReport) -> Self {
        Self {
            scenario: scenario.to_string(),
            method: method.to_string(),
            preconditioner: preconditioner.to_string(),
            iterations: report.iterations,
            residual: report.final_relative_residual,
            seconds: report.wall_time,
        }
    }
}

/// Append `row` to the CSV at `path`, writing the header for a new file.
pub fn append_run_log(path: &Path, row: &RunLogRow) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests;
