//! Scenario execution: assembly, solve, post-processing and output.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{inverse_source, Method, ScenarioConfig, TargetKind};
use crate::colloc::{colloc_cost, solve_colloc, CollocConfig, CollocData, CollocSolution, CollocSystem};
use crate::error::{Error, Result};
use crate::fem::{assemble_load, l2_project, write_field_csv, FeSpace};
use crate::gpc::{build_basis, build_sparse_grid, Family, GpcBasis};
use crate::linalg::{BandedLu, Identity, LinearOperator, SparseMat};
use crate::oneshot::{
    assemble_reduced, assemble_saddle, eval_cost, forward_operator, moments, piecewise_target, recover_control, split_solution,
    Channel, ControlSpec, CostBreakdown, GalerkinSystem, Regularization, RhsData, StochasticField, TargetSpec,
};
use crate::randfield::{kl_expand, CovarianceSpec, KlField};
use crate::solve::{
    append_run_log, galerkin_hierarchy, krylov_solve, KrylovConfig, KrylovMethod, MeanBasedPreconditioner,
    MeanStiffnessPreconditioner, PreconditionerKind, RunLogRow, SaddleBlockPreconditioner, SolveReport,
};

/// Summary of one run, one CSV line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub table: String,
    pub method: String,
    pub functional: String,
    pub channel: String,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: u8,
    #[serde(rename = "J")]
    pub j: f64,
    pub tracking: f64,
    pub std_sq: f64,
    /// `‖u − û‖² / ‖û‖²` for inverse problems.
    pub e_u: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub seconds: f64,
    pub converged: bool,
}

impl ResultRow {
    fn new(cfg: &ScenarioConfig, spec: &ControlSpec, cost: CostBreakdown, e_u: Option<f64>, rep: &SolveReport) -> Self {
        Self {
            scenario: cfg.name.clone(),
            table: cfg.table.clone().unwrap_or_default(),
            method: cfg.method.name().into(),
            functional: format!("{:?}", spec.functional),
            channel: match spec.channel {
                Channel::Distributive => "distributive".into(),
                Channel::Boundary => "boundary".into(),
            },
            alpha: spec.alpha,
            beta: spec.beta,
            gamma: spec.gamma,
            delta: spec.delta,
            epsilon: spec.epsilon,
            j: cost.j,
            tracking: cost.tracking,
            std_sq: cost.std_sq,
            e_u,
            iterations: rep.iterations,
            residual: rep.final_relative_residual,
            seconds: rep.wall_time,
            converged: rep.converged,
        }
    }

    /// All numeric fields are finite.
    pub fn is_finite(&self) -> bool {
        [self.j, self.tracking, self.std_sq, self.residual, self.seconds]
            .iter()
            .chain(self.e_u.iter())
            .all(|v| v.is_finite())
    }
}

/// Nodal summaries of a solved scenario on free dofs.
#[derive(Debug, Clone)]
pub struct FieldSummary {
    pub state_mean: Vec<f64>,
    pub state_variance: Vec<f64>,
    pub control_mean: Vec<f64>,
    pub control_variance: Vec<f64>,
}

/// Everything a Galerkin run produces.
#[derive(Debug, Clone)]
pub struct GalerkinRun {
    pub spec: ControlSpec,
    pub sys: GalerkinSystem,
    pub data: RhsData,
    pub state: StochasticField,
    pub adjoint: StochasticField,
    /// Total control (mean plus prescribed perturbation when `epsilon = 1`).
    pub control: StochasticField,
    pub cost: CostBreakdown,
    pub e_u: Option<f64>,
    pub report: SolveReport,
}

/// Everything a collocation run produces.
#[derive(Debug, Clone)]
pub struct CollocRun {
    pub spec: ControlSpec,
    pub sys: CollocSystem,
    pub data: CollocData,
    pub solution: CollocSolution,
    pub cost: CostBreakdown,
    pub e_u: Option<f64>,
    pub report: SolveReport,
}

fn coefficient_field(cfg: &ScenarioConfig) -> Result<KlField> {
    let r = cfg.resolved();
    kl_expand(&cfg.field.covariance(), r.kl_terms, cfg.field.mean)
}

fn galerkin_basis(cfg: &ScenarioConfig) -> Result<GpcBasis> {
    let r = cfg.resolved();
    let mut families = vec![Family::Legendre; r.kl_terms];
    if let Some(p) = &cfg.perturbation {
        families.extend(std::iter::repeat(Family::Hermite).take(p.terms));
    }
    build_basis(&families, r.order)
}

/// Assemble the Galerkin system of a scenario.
pub fn galerkin_system(cfg: &ScenarioConfig) -> Result<GalerkinSystem> {
    let space = FeSpace::unit_square(cfg.resolved().n)?;
    GalerkinSystem::new(space, &coefficient_field(cfg)?, galerkin_basis(cfg)?)
}

/// Galerkin coefficients of the prescribed control perturbation: each KL
/// mode sits in the block of the first-degree Hermite polynomial of its
/// variable.
fn perturbation_field(cfg: &ScenarioConfig, sys: &GalerkinSystem) -> Result<Option<StochasticField>> {
    let Some(p) = &cfg.perturbation else {
        return Ok(None);
    };
    let offset = cfg.resolved().kl_terms;
    let cov = CovarianceSpec {
        variance: p.variance,
        corr_length: p.corr_length,
        ..Default::default()
    };
    let kl = kl_expand(&cov, p.terms, 0.0)?.with_slot_offset(offset);
    let mut out = StochasticField::zeros(sys.n(), sys.q());
    for (m, &slot) in kl.slots().iter().enumerate() {
        let mut idx = vec![0; sys.basis.dim()];
        idx[slot] = 1;
        let pos = sys.basis.position(&idx).ok_or_else(|| Error::InvalidSpec("perturbation needs order >= 1".into()))?;
        let mode = |x1: f64, x2: f64| kl.mode(m, x1, x2);
        let coeffs = match cfg.control.channel {
            Channel::Distributive => l2_project(&sys.space, &sys.mass, &mode),
            Channel::Boundary => sys.space.interpolate(mode),
        };
        out.block_mut(pos).copy_from_slice(&coeffs);
    }
    Ok(Some(out))
}

/// Forward solve `Σ C_i ⊗ K_i z = f ⊗ e_1` by preconditioned CG.
pub fn galerkin_forward(sys: &GalerkinSystem, load: &[f64]) -> Result<(StochasticField, SolveReport)> {
    let op = forward_operator(sys)?;
    let mut rhs = vec![0.0; sys.n() * sys.q()];
    rhs[..sys.n()].copy_from_slice(load);
    let pre = MeanStiffnessPreconditioner::new(sys)?;
    let cfg = KrylovConfig {
        method: KrylovMethod::Cg,
        rel_tol: 1e-13,
        max_iter: 1000,
        restart: None,
    };
    let (x, rep) = krylov_solve(&op, &rhs, &pre, &cfg)?;
    if rep.final_relative_residual > 1e-11 {
        return Err(Error::NotConverged(format!(
            "forward solve stopped at residual {:.3e}",
            rep.final_relative_residual
        )));
    }
    Ok((StochasticField::from_vec(sys.n(), sys.q(), x)?, rep))
}

/// Inverse-problem target: the forward response to the inverse source,
/// keeping only the mean for the deterministic variant.
pub fn generate_inverse_target(cfg: &ScenarioConfig) -> Result<TargetSpec> {
    let sys = galerkin_system(cfg)?;
    inverse_target_for(cfg.target, &sys)
}

fn inverse_target_for(kind: TargetKind, sys: &GalerkinSystem) -> Result<TargetSpec> {
    let load = assemble_load(&sys.space, &inverse_source);
    let (z, _) = galerkin_forward(sys, &load)?;
    Ok(match kind {
        TargetKind::InverseStochastic => TargetSpec::Stochastic(z),
        _ => TargetSpec::Stochastic(StochasticField::deterministic(z.mean().to_vec())),
    })
}

/// Per-point inverse targets for collocation, by direct solves.
fn colloc_inverse_targets(kind: TargetKind, sys: &CollocSystem) -> Result<Vec<Vec<f64>>> {
    let load = assemble_load(&sys.space, &inverse_source);
    let mut out = Vec::with_capacity(sys.npoints());
    for i in 0..sys.npoints() {
        let lu = BandedLu::factor(&sys.stiffness_at(i)).map_err(|e| Error::PointSolve {
            point: i,
            reason: e.to_string(),
        })?;
        let mut z = load.clone();
        lu.solve_in_place(&mut z);
        out.push(z);
    }
    if kind == TargetKind::InverseDeterministic {
        let mut mean = vec![0.0; sys.n()];
        for (w, z) in sys.grid.weights().iter().zip(&out) {
            for (m, v) in mean.iter_mut().zip(z) {
                *m += w * v;
            }
        }
        out = vec![mean];
    }
    Ok(out)
}

fn relative_control_error(mass: &SparseMat, controls: &[(f64, &[f64])], exact: &[f64]) -> f64 {
    let norm = mass.quad_form(exact, exact);
    let mut err = 0.0;
    for (w, u) in controls {
        let d: Vec<f64> = u.iter().zip(exact).map(|(a, b)| a - b).collect();
        err += w * mass.quad_form(&d, &d);
    }
    err / norm
}

/// Solve a Galerkin scenario.
pub fn solve_galerkin(cfg: &ScenarioConfig) -> Result<GalerkinRun> {
    cfg.validate()?;
    let sys = galerkin_system(cfg)?;
    solve_galerkin_with(cfg, sys)
}

/// Solve a Galerkin scenario on an already assembled system.
pub fn solve_galerkin_with(cfg: &ScenarioConfig, sys: GalerkinSystem) -> Result<GalerkinRun> {
    let spec = cfg.control;
    let start = Instant::now();
    let target = match cfg.target {
        TargetKind::Piecewise => TargetSpec::piecewise().coefficients(&sys.space, &sys.mass, 1)?,
        kind => match inverse_target_for(kind, &sys)? {
            TargetSpec::Stochastic(s) => s,
            TargetSpec::Deterministic(_) => unreachable!("inverse targets are coefficient fields"),
        },
    };
    let mut data = RhsData::zeros(sys.n());
    if cfg.source != 0.0 {
        let s = cfg.source;
        data.load = StochasticField::deterministic(assemble_load(&sys.space, &|_, _| s));
    }
    data.target = target;
    data.perturbation = perturbation_field(cfg, &sys)?;
    let kcfg = cfg.krylov();
    let (_, pre_kind) = cfg.solver_choice();
    let field = coefficient_field(cfg)?;
    let h1 = spec.regularization == Regularization::H1;
    let (op, rhs) = if h1 {
        assemble_saddle(&spec, &sys, &data)?
    } else {
        assemble_reduced(&spec, &sys, &data)?
    };
    let pre: Box<dyn LinearOperator> = match pre_kind {
        PreconditionerKind::None => Box::new(Identity(op.dim())),
        PreconditionerKind::MeanBased => Box::new(MeanBasedPreconditioner::new(&spec, &sys)?),
        PreconditionerKind::BlockDiagonal => Box::new(SaddleBlockPreconditioner::new(&spec, &sys)?),
        PreconditionerKind::Multigrid => {
            Box::new(galerkin_hierarchy(&spec, &field, &sys.basis, &sys.space, cfg.solver.mg)?)
        }
    };
    let (x, mut report) = krylov_solve(&op, &rhs, pre.as_ref(), &kcfg)?;
    let parts = split_solution(&x, sys.n(), sys.q());
    let (state, adjoint, control) = if h1 {
        (parts[0].clone(), parts[2].clone(), parts[1].clone())
    } else {
        let mut u = recover_control(&spec, &parts[1])?;
        if let (true, Some(p)) = (spec.mean_only(), &data.perturbation) {
            u = u.add(p)?;
        }
        (parts[0].clone(), parts[1].clone(), u)
    };
    let cost = match spec.channel {
        Channel::Distributive => eval_cost(&spec, &sys, &state, Some(&control), None, &data.target)?,
        Channel::Boundary => eval_cost(&spec, &sys, &state, None, Some(&control), &data.target)?,
    };
    let e_u = if cfg.target.is_inverse() {
        let exact = l2_project(&sys.space, &sys.mass, &inverse_source);
        let mean_err = relative_control_error(&sys.mass, &[(1.0, control.mean())], &exact);
        Some(mean_err + control.fluctuation_norm_sq(&sys.mass) / sys.mass.quad_form(&exact, &exact))
    } else {
        None
    };
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(GalerkinRun {
        spec,
        sys,
        data,
        state,
        adjoint,
        control,
        cost,
        e_u,
        report,
    })
}

/// Solve a collocation scenario.
pub fn solve_collocation(cfg: &ScenarioConfig) -> Result<CollocRun> {
    cfg.validate()?;
    let start = Instant::now();
    let r = cfg.resolved();
    let spec = cfg.control;
    let space = FeSpace::unit_square(r.n)?;
    let grid = build_sparse_grid(r.kl_terms, r.level)?;
    let sys = CollocSystem::new(space, &coefficient_field(cfg)?, grid)?;
    let load = if cfg.source != 0.0 {
        let s = cfg.source;
        assemble_load(&sys.space, &|_, _| s)
    } else {
        vec![0.0; sys.n()]
    };
    let target = match cfg.target {
        TargetKind::Piecewise => vec![l2_project(&sys.space, &sys.mass, &piecewise_target)],
        kind => colloc_inverse_targets(kind, &sys)?,
    };
    let data = CollocData {
        load: vec![load],
        target,
        perturbation: None,
    };
    let ccfg = CollocConfig {
        krylov: KrylovConfig {
            method: KrylovMethod::Gmres,
            ..cfg.krylov()
        },
        point_solver: cfg.solver.point_solver,
        mg: cfg.solver.mg,
        threads: cfg.solver.threads,
    };
    let solution = solve_colloc(&spec, &sys, &data, &ccfg)?;
    let cost = colloc_cost(&spec, &sys, &solution, &data)?;
    let e_u = if cfg.target.is_inverse() {
        let exact = l2_project(&sys.space, &sys.mass, &inverse_source);
        let controls: Vec<(f64, &[f64])> = sys
            .grid
            .weights()
            .iter()
            .zip(&solution.control)
            .map(|(w, u)| (*w, u.as_slice()))
            .collect();
        Some(relative_control_error(&sys.mass, &controls, &exact))
    } else {
        None
    };
    let report = SolveReport {
        iterations: solution.reports.iter().map(|r| r.iterations).sum(),
        final_relative_residual: solution
            .reports
            .iter()
            .map(|r| r.final_relative_residual)
            .fold(0.0, f64::max),
        converged: solution.converged(),
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(CollocRun {
        spec,
        sys,
        data,
        solution,
        cost,
        e_u,
        report,
    })
}

impl GalerkinRun {
    pub fn summary(&self) -> FieldSummary {
        let (state_mean, state_variance) = moments(&self.state);
        let (control_mean, control_variance) = moments(&self.control);
        FieldSummary {
            state_mean,
            state_variance,
            control_mean,
            control_variance,
        }
    }
}

fn cubature_moments(w: &[f64], fields: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = fields[0].len();
    let mut mean = vec![0.0; n];
    for (wi, f) in w.iter().zip(fields) {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += wi * v;
        }
    }
    let mut var = vec![0.0; n];
    for (wi, f) in w.iter().zip(fields) {
        for ((s, v), m) in var.iter_mut().zip(f).zip(&mean) {
            *s += wi * (v - m) * (v - m);
        }
    }
    (mean, var)
}

impl CollocRun {
    pub fn summary(&self) -> FieldSummary {
        let w = self.sys.grid.weights();
        let (state_mean, state_variance) = cubature_moments(w, &self.solution.state);
        let (control_mean, control_variance) = cubature_moments(w, &self.solution.control);
        FieldSummary {
            state_mean,
            state_variance,
            control_mean,
            control_variance,
        }
    }
}

fn write_outputs(cfg: &ScenarioConfig, space: &FeSpace, summary: &FieldSummary, row: &ResultRow) -> Result<()> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir)?;
    if cfg.output.fields {
        let name = &cfg.name;
        for (suffix, values) in [
            ("state_mean", &summary.state_mean),
            ("state_variance", &summary.state_variance),
            ("control_mean", &summary.control_mean),
            ("control_variance", &summary.control_variance),
        ] {
            write_field_csv(&dir.join(format!("{name}_{suffix}.csv")), space, values)?;
        }
    }
    append_rows(&dir.join("results.csv"), std::slice::from_ref(row))?;
    let (_, pre) = cfg.solver_choice();
    let pre_name = match cfg.method {
        Method::Galerkin => pre.name(),
        Method::Collocation => "pointwise",
    };
    let rep = SolveReport {
        iterations: row.iterations,
        final_relative_residual: row.residual,
        converged: row.converged,
        wall_time: row.seconds,
    };
    append_run_log(&dir.join("runlog.csv"), &RunLogRow::new(&cfg.name, cfg.method.name(), pre_name, &rep))?;
    Ok(())
}

/// Append rows to a results CSV, writing the header for a new file.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let fresh = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Read all rows of a results CSV.
pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Run one scenario end to end and write its outputs.
///
/// A solver that stops short of the tolerance still yields a row, with
/// `converged = false`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultRow> {
    cfg.validate()?;
    log::info!("running {} ({:?}, {:?})", cfg.name, cfg.method, cfg.resolved());
    let (row, space, summary) = match cfg.method {
        Method::Galerkin => {
            let run = solve_galerkin(cfg)?;
            let row = ResultRow::new(cfg, &run.spec, run.cost, run.e_u, &run.report);
            (row, run.sys.space.clone(), run.summary())
        }
        Method::Collocation => {
            let run = solve_collocation(cfg)?;
            let row = ResultRow::new(cfg, &run.spec, run.cost, run.e_u, &run.report);
            (row, run.sys.space.clone(), run.summary())
        }
    };
    write_outputs(cfg, &space, &summary, &row)?;
    if !row.converged {
        log::warn!("{}: solver stopped at residual {:.3e}", cfg.name, row.residual);
    }
    Ok(row)
}

/// One run per entry of `gamma_sweep`, plus a `(gamma, tracking)` CSV.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.gamma_sweep.is_empty() {
        return Err(Error::Config("gamma_sweep is empty".into()));
    }
    let mut rows = Vec::with_capacity(cfg.gamma_sweep.len());
    for &g in &cfg.gamma_sweep {
        let mut c = cfg.clone();
        c.control.gamma = g;
        c.name = format!("{}_gamma{:e}", cfg.name, g);
        c.gamma_sweep.clear();
        rows.push(run_scenario(&c)?);
    }
    std::fs::create_dir_all(&cfg.output.dir)?;
    let mut w = csv::Writer::from_path(cfg.output.dir.join(format!("{}_sweep.csv", cfg.name)))?;
    w.write_record(["gamma", "tracking"])?;
    for r in &rows {
        w.write_record([format!("{:e}", r.gamma), format!("{:.10e}", r.tracking)])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Group rows by their `table` key and write `<table>.csv` for each into
/// `dir`; rows without a key go to `results_untabled.csv`. Returns the
/// written paths.
pub fn collate_tables(rows: &[ResultRow], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut keys: Vec<String> = rows.iter().map(|r| r.table.clone()).collect();
    keys.sort();
    keys.dedup();
    let mut paths = Vec::new();
    for key in keys {
        let name = if key.is_empty() { "results_untabled".to_string() } else { key.clone() };
        let path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows.iter().filter(|r| r.table == key) {
            w.serialize(r)?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}
