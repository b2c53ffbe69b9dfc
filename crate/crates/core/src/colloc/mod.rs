//! Stochastic collocation on sparse grids: decoupled per-point one-shot
//! solves, the coupled block system for mean controls, variance terms and
//! J2 tracking, response reconstruction and cubature-based costs.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_mass, assemble_mass, assemble_stiffness, write_field_csv, FeSpace};
use crate::gpc::SparseGrid;
use crate::linalg::{LinearOperator, SparseMat, TripletBuilder};
use crate::oneshot::{Channel, ControlSpec, Functional, KronOperator, Regularization};
use crate::randfield::KlField;
use crate::solve::{krylov_solve, KrylovConfig, MgConfig, MgHierarchy, PairSolver, SolveReport};

/// How the collocation equations interact across grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Independent deterministic one-shot problems per point.
    Decoupled,
    /// Only the mean control is unknown (`epsilon = 1`).
    CoupledMean,
    /// The variance term couples adjoints (`β ≠ 0`).
    CoupledVariance,
    /// J2 tracks the mean state.
    CoupledJ2,
    /// H1 regularization couples controls through the `y`-gradient.
    CoupledH1,
}

/// Decoupled exactly for J1 with `β = 0`, `ε = 0` and L2 regularization.
/// Otherwise the first applicable of H1, mean control, variance, J2.
pub fn classify_coupling(spec: &ControlSpec) -> CouplingMode {
    if spec.regularization == Regularization::H1 {
        CouplingMode::CoupledH1
    } else if spec.mean_only() {
        CouplingMode::CoupledMean
    } else if spec.beta != 0.0 {
        CouplingMode::CoupledVariance
    } else if spec.functional == Functional::J2 {
        CouplingMode::CoupledJ2
    } else {
        CouplingMode::Decoupled
    }
}

/// How each per-point `2N × 2N` system is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSolverKind {
    /// Banded LU below `AUTO_DIRECT_MAX` unknowns, multigrid above.
    Auto,
    Direct,
    Multigrid,
}

const AUTO_DIRECT_MAX: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollocConfig {
    pub krylov: KrylovConfig,
    pub point_solver: PointSolverKind,
    pub mg: MgConfig,
    /// Worker threads for decoupled problems; `1` solves points in order on
    /// the calling thread. Results do not depend on this value.
    pub threads: usize,
}

impl Default for CollocConfig {
    fn default() -> Self {
        Self {
            krylov: KrylovConfig {
                rel_tol: 1e-10,
                ..Default::default()
            },
            point_solver: PointSolverKind::Auto,
            mg: MgConfig::default(),
            threads: 1,
        }
    }
}

/// Spatial matrices and the grid shared by all collocation solves.
#[derive(Debug, Clone)]
pub struct CollocSystem {
    pub space: FeSpace,
    pub field: KlField,
    pub grid: SparseGrid,
    pub mass: Arc<SparseMat>,
    pub boundary_mass: Arc<SparseMat>,
    /// Mean stiffness followed by one stiffness per KL mode.
    pub stiffness: Vec<Arc<SparseMat>>,
}

impl CollocSystem {
    pub fn new(space: FeSpace, field: &KlField, grid: SparseGrid) -> Result<Self> {
        if let Some(&s) = field.slots().iter().max() {
            if s >= grid.dim() {
                return Err(Error::DimensionMismatch {
                    expected: s + 1,
                    got: grid.dim(),
                });
            }
        }
        for (i, y) in grid.points().iter().enumerate() {
            let lowest = space
                .mesh()
                .nodes()
                .iter()
                .map(|&[x1, x2]| field.value(x1, x2, y))
                .fold(f64::INFINITY, f64::min);
            if !(lowest > 0.0) {
                return Err(Error::PointSolve {
                    point: i,
                    reason: format!("diffusion coefficient reaches {lowest:.3e}"),
                });
            }
        }
        let mean = field.mean;
        let mut stiffness = vec![Arc::new(assemble_stiffness(&space, &|_, _| mean))];
        for m in 0..field.n_modes() {
            stiffness.push(Arc::new(assemble_stiffness(&space, &|x1, x2| field.mode(m, x1, x2))));
        }
        Ok(Self {
            mass: Arc::new(assemble_mass(&space)),
            boundary_mass: Arc::new(assemble_boundary_mass(&space)),
            space,
            field: field.clone(),
            grid,
            stiffness,
        })
    }

    pub fn n(&self) -> usize {
        self.space.ndofs()
    }

    /// Number of collocation points.
    pub fn npoints(&self) -> usize {
        self.grid.len()
    }

    pub fn control_mass(&self, channel: Channel) -> &Arc<SparseMat> {
        match channel {
            Channel::Distributive => &self.mass,
            Channel::Boundary => &self.boundary_mass,
        }
    }

    /// `K(ŷ^i) = K_1 + Σ_m ŷ^i_{slot(m)} K_{m+1}`.
    pub fn stiffness_at(&self, point: usize) -> SparseMat {
        let y = &self.grid.points()[point];
        let mut k = (*self.stiffness[0]).clone();
        for (m, &slot) in self.field.slots().iter().enumerate() {
            k = SparseMat::linear_combination(1.0, &k, y[slot], &self.stiffness[m + 1]);
        }
        k
    }

    fn stiffness_on(&self, space: &FeSpace, point: usize) -> SparseMat {
        if space.ndofs() == self.n() {
            return self.stiffness_at(point);
        }
        let y = &self.grid.points()[point];
        assemble_stiffness(space, &|x1, x2| self.field.value(x1, x2, y))
    }
}

/// Right-hand-side data per collocation point. Vectors hold free-dof
/// coefficients; a list of length one is shared by all points.
#[derive(Debug, Clone)]
pub struct CollocData {
    pub load: Vec<Vec<f64>>,
    pub target: Vec<Vec<f64>>,
    /// `u'` or `g'` at each point; used only when `epsilon = 1`.
    pub perturbation: Option<Vec<Vec<f64>>>,
}

impl CollocData {
    /// Deterministic load and target.
    pub fn deterministic(load: Vec<f64>, target: Vec<f64>) -> Self {
        Self {
            load: vec![load],
            target: vec![target],
            perturbation: None,
        }
    }

    fn pick(list: &[Vec<f64>], i: usize) -> &[f64] {
        if list.len() == 1 {
            &list[0]
        } else {
            &list[i]
        }
    }

    pub fn load_at(&self, i: usize) -> &[f64] {
        Self::pick(&self.load, i)
    }

    pub fn target_at(&self, i: usize) -> &[f64] {
        Self::pick(&self.target, i)
    }

    fn check(&self, n: usize, points: usize) -> Result<()> {
        let lists = [Some(&self.load), Some(&self.target), self.perturbation.as_ref()];
        for list in lists.into_iter().flatten() {
            if list.len() != 1 && list.len() != points {
                return Err(Error::DimensionMismatch {
                    expected: points,
                    got: list.len(),
                });
            }
            for v in list {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: v.len() });
                }
            }
        }
        Ok(())
    }
}

/// Snapshots at every collocation point.
#[derive(Debug, Clone)]
pub struct CollocSolution {
    pub grid: SparseGrid,
    pub state: Vec<Vec<f64>>,
    pub adjoint: Vec<Vec<f64>>,
    /// Total control at each point (mean control plus perturbation when
    /// `epsilon = 1`).
    pub control: Vec<Vec<f64>>,
    pub reports: Vec<SolveReport>,
}

impl CollocSolution {
    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    /// Cubature mean of the state.
    pub fn mean_state(&self) -> Vec<f64> {
        weighted_mean(self.grid.weights(), &self.state)
    }

    pub fn converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

fn weighted_mean(w: &[f64], fields: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; fields.first().map_or(0, |f| f.len())];
    for (wi, f) in w.iter().zip(fields) {
        for (o, v) in out.iter_mut().zip(f) {
            *o += wi * v;
        }
    }
    out
}

/// `[[K, a·Mc], [b·M, K]]` as a two-block Kronecker operator.
fn pair_operator(k: Arc<SparseMat>, mc: Arc<SparseMat>, a: f64, m: Arc<SparseMat>, b: f64) -> Result<KronOperator> {
    let mut op = KronOperator::new(k.nrows(), 2);
    op.push(SparseMat::identity(2), k)?;
    op.push(SparseMat::from_dense(2, 2, &[0.0, a, 0.0, 0.0]), mc)?;
    op.push(SparseMat::from_dense(2, 2, &[0.0, 0.0, b, 0.0]), m)?;
    Ok(op)
}

/// Approximate or exact inverse of one per-point pair system.
fn point_inverse(
    sys: &CollocSystem,
    point: usize,
    channel: Channel,
    a: f64,
    b: f64,
    cfg: &CollocConfig,
) -> Result<Box<dyn LinearOperator>> {
    let direct = match cfg.point_solver {
        PointSolverKind::Direct => true,
        PointSolverKind::Multigrid => false,
        PointSolverKind::Auto => 2 * sys.n() <= AUTO_DIRECT_MAX,
    };
    if direct {
        let k = sys.stiffness_at(point);
        return Ok(Box::new(PairSolver::new(&k, sys.control_mass(channel), a, &sys.mass, b)?));
    }
    let mg = MgHierarchy::build(&sys.space, cfg.mg, &|s: &FeSpace| {
        let k = Arc::new(sys.stiffness_on(s, point));
        let (m, mc) = if s.ndofs() == sys.n() {
            (sys.mass.clone(), sys.control_mass(channel).clone())
        } else {
            let m = Arc::new(assemble_mass(s));
            let mc = match channel {
                Channel::Distributive => m.clone(),
                Channel::Boundary => Arc::new(assemble_boundary_mass(s)),
            };
            (m, mc)
        };
        pair_operator(k, mc, a, m, b)
    })?;
    Ok(Box::new(mg))
}

fn check_spec(spec: &ControlSpec) -> Result<f64> {
    spec.validate()?;
    if spec.regularization == Regularization::H1 {
        return Err(Error::Unsupported("collocation with H1 regularization".into()));
    }
    let p = spec.penalty();
    if !(p > 0.0) {
        return Err(Error::InvalidSpec("collocation needs a positive control penalty".into()));
    }
    Ok(p)
}

/// Solve the independent per-point problems; requires the decoupled mode.
pub fn solve_decoupled(
    spec: &ControlSpec,
    sys: &CollocSystem,
    data: &CollocData,
    cfg: &CollocConfig,
) -> Result<CollocSolution> {
    let p = check_spec(spec)?;
    let mode = classify_coupling(spec);
    if mode != CouplingMode::Decoupled {
        return Err(Error::Unsupported(format!("{mode:?} problems need the coupled solver")));
    }
    let (n, npts) = (sys.n(), sys.npoints());
    data.check(n, npts)?;
    let mc = sys.control_mass(spec.channel).clone();
    let solve_point = |i: usize| -> Result<(Vec<f64>, SolveReport)> {
        let k = Arc::new(sys.stiffness_at(i));
        let op = pair_operator(k, mc.clone(), 1.0 / p, sys.mass.clone(), -spec.alpha)?;
        let mut rhs = vec![0.0; 2 * n];
        rhs[..n].copy_from_slice(data.load_at(i));
        sys.mass.mul_vec_add(-spec.alpha, data.target_at(i), &mut rhs[n..]);
        let pre = point_inverse(sys, i, spec.channel, 1.0 / p, -spec.alpha, cfg)?;
        let (x, rep) = krylov_solve(&op, &rhs, pre.as_ref(), &cfg.krylov)
            .map_err(|e| Error::PointSolve { point: i, reason: e.to_string() })?;
        if !rep.converged {
            log::warn!("collocation point {i} stopped at residual {:.3e}", rep.final_relative_residual);
        }
        Ok((x, rep))
    };
    let threads = cfg.threads.clamp(1, npts.max(1));
    let results: Vec<Result<(Vec<f64>, SolveReport)>> = if threads == 1 {
        (0..npts).map(solve_point).collect()
    } else {
        let mut slots: Vec<Option<Result<(Vec<f64>, SolveReport)>>> = (0..npts).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let solve_point = &solve_point;
                    scope.spawn(move || (t..npts).step_by(threads).map(|i| (i, solve_point(i))).collect::<Vec<_>>())
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("collocation worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|r| r.expect("every point is solved")).collect()
    };
    let mut sol = CollocSolution {
        grid: sys.grid.clone(),
        state: Vec::with_capacity(npts),
        adjoint: Vec::with_capacity(npts),
        control: Vec::with_capacity(npts),
        reports: Vec::with_capacity(npts),
    };
    for r in results {
        let (x, rep) = r?;
        let (z, l) = x.split_at(n);
        sol.control.push(l.iter().map(|v| -v / p).collect());
        sol.state.push(z.to_vec());
        sol.adjoint.push(l.to_vec());
        sol.reports.push(rep);
    }
    Ok(sol)
}

/// Stochastic coupling matrices `(S, A)` of the coupled system: state rows
/// carry `S ⊗ M^c` acting on adjoints, adjoint rows `A ⊗ M` acting on states.
///
/// `S = ((1−ε) I + ε 1wᵀ)/p`; `A = −(α+β) I + β 1wᵀ` (J1) or
/// `A = −β I − (α−β) 1wᵀ` (J2).
pub fn coupling_blocks(spec: &ControlSpec, weights: &[f64]) -> (SparseMat, SparseMat) {
    let q = weights.len();
    let p = spec.penalty();
    let eps = spec.epsilon as f64;
    let (diag_a, rank_a) = match spec.functional {
        Functional::J1 => (-(spec.alpha + spec.beta), spec.beta),
        Functional::J2 => (-spec.beta, -(spec.alpha - spec.beta)),
    };
    let mut s = TripletBuilder::new(q, q);
    let mut a = TripletBuilder::new(q, q);
    for i in 0..q {
        s.push(i, i, (1.0 - eps) / p);
        a.push(i, i, diag_a);
        for (j, &w) in weights.iter().enumerate() {
            s.push(i, j, eps * w / p);
            a.push(i, j, rank_a * w);
        }
    }
    (s.build(), a.build())
}

/// The coupled `2N Q_c` operator in block-major order
/// `(z_1..z_Q, λ_1..λ_Q)`.
pub fn coupled_operator(spec: &ControlSpec, sys: &CollocSystem) -> Result<KronOperator> {
    check_spec(spec)?;
    let (n, q) = (sys.n(), sys.npoints());
    let mut op = KronOperator::new(n, 2 * q);
    for i in 0..q {
        let mut t = TripletBuilder::new(2 * q, 2 * q);
        t.push(i, i, 1.0);
        t.push(q + i, q + i, 1.0);
        op.push(t.build(), Arc::new(sys.stiffness_at(i)))?;
    }
    let (s, a) = coupling_blocks(spec, sys.grid.weights());
    let shift = |c: &SparseMat, ro: usize, co: usize| {
        let mut t = TripletBuilder::new(2 * q, 2 * q);
        for (r, k, v) in c.iter() {
            t.push(r + ro, k + co, v);
        }
        t.build()
    };
    op.push(shift(&s, 0, q), sys.control_mass(spec.channel).clone())?;
    op.push(shift(&a, q, 0), sys.mass.clone())?;
    Ok(op)
}

/// State rows `load_i + ε M^c u'_i`; adjoint rows `−α M ẑ_i` (J1) or
/// `−α M Σ_j w_j ẑ_j` (J2).
pub fn coupled_rhs(spec: &ControlSpec, sys: &CollocSystem, data: &CollocData) -> Result<Vec<f64>> {
    let (n, q) = (sys.n(), sys.npoints());
    data.check(n, q)?;
    let mut rhs = vec![0.0; 2 * n * q];
    let mc = sys.control_mass(spec.channel);
    let mean_target = match spec.functional {
        Functional::J1 => None,
        Functional::J2 => {
            let all: Vec<Vec<f64>> = (0..q).map(|i| data.target_at(i).to_vec()).collect();
            Some(weighted_mean(sys.grid.weights(), &all))
        }
    };
    for i in 0..q {
        let zs = &mut rhs[i * n..(i + 1) * n];
        zs.copy_from_slice(data.load_at(i));
        if let (true, Some(pert)) = (spec.mean_only(), &data.perturbation) {
            mc.mul_vec_add(1.0, CollocData::pick(pert, i), zs);
        }
        let target = mean_target.as_deref().unwrap_or_else(|| data.target_at(i));
        sys.mass.mul_vec_add(-spec.alpha, target, &mut rhs[(q + i) * n..(q + i + 1) * n]);
    }
    Ok(rhs)
}

/// Block-Jacobi preconditioner: per-point inverses of the diagonal blocks
/// of the coupled operator.
struct BlockJacobi {
    n: usize,
    blocks: Vec<Box<dyn LinearOperator>>,
}

impl LinearOperator for BlockJacobi {
    fn dim(&self) -> usize {
        2 * self.n * self.blocks.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n, q) = (self.n, self.blocks.len());
        let mut xi = vec![0.0; 2 * n];
        let mut yi = vec![0.0; 2 * n];
        for (i, b) in self.blocks.iter().enumerate() {
            xi[..n].copy_from_slice(&x[i * n..(i + 1) * n]);
            xi[n..].copy_from_slice(&x[(q + i) * n..(q + i + 1) * n]);
            b.apply(&xi, &mut yi);
            y[i * n..(i + 1) * n].copy_from_slice(&yi[..n]);
            y[(q + i) * n..(q + i + 1) * n].copy_from_slice(&yi[n..]);
        }
    }
}

/// Solve the coupled collocation system with block-Jacobi GMRES.
pub fn solve_coupled(
    spec: &ControlSpec,
    sys: &CollocSystem,
    data: &CollocData,
    cfg: &CollocConfig,
) -> Result<CollocSolution> {
    let p = check_spec(spec)?;
    let (n, q) = (sys.n(), sys.npoints());
    let op = coupled_operator(spec, sys)?;
    let rhs = coupled_rhs(spec, sys, data)?;
    let (s, a) = coupling_blocks(spec, sys.grid.weights());
    let mut blocks = Vec::with_capacity(q);
    for i in 0..q {
        let (si, ai) = (s.get(i, i), a.get(i, i));
        blocks.push(point_inverse(sys, i, spec.channel, si, ai, cfg)?);
    }
    let pre = BlockJacobi { n, blocks };
    let (x, rep) = krylov_solve(&op, &rhs, &pre, &cfg.krylov)?;
    if !rep.converged {
        log::warn!("coupled collocation stopped at residual {:.3e}", rep.final_relative_residual);
    }
    let state: Vec<Vec<f64>> = x[..n * q].chunks(n).map(|c| c.to_vec()).collect();
    let adjoint: Vec<Vec<f64>> = x[n * q..].chunks(n).map(|c| c.to_vec()).collect();
    let control = if spec.mean_only() {
        let mean: Vec<f64> = weighted_mean(sys.grid.weights(), &adjoint).iter().map(|v| -v / p).collect();
        (0..q)
            .map(|i| match &data.perturbation {
                Some(pert) => mean.iter().zip(CollocData::pick(pert, i)).map(|(a, b)| a + b).collect(),
                None => mean.clone(),
            })
            .collect()
    } else {
        adjoint.iter().map(|l| l.iter().map(|v| -v / p).collect()).collect()
    };
    Ok(CollocSolution {
        grid: sys.grid.clone(),
        state,
        adjoint,
        control,
        reports: vec![rep],
    })
}

/// Dispatch on the coupling mode.
pub fn solve_colloc(
    spec: &ControlSpec,
    sys: &CollocSystem,
    data: &CollocData,
    cfg: &CollocConfig,
) -> Result<CollocSolution> {
    match classify_coupling(spec) {
        CouplingMode::Decoupled => solve_decoupled(spec, sys, data, cfg),
        _ => solve_coupled(spec, sys, data, cfg),
    }
}

/// Evaluate the sparse interpolant of `fields` at `y`.
pub fn reconstruct(grid: &SparseGrid, fields: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    if fields.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: fields.len(),
        });
    }
    let w = grid.interpolation_weights(y)?;
    Ok(weighted_mean(&w, fields))
}

/// Cost of a collocation solution by cubature over the snapshots.
///
/// J1: `Σ_i w_i [z_iᵀM((α+β)/2 z_i − α ẑ_i − β/2 z̄) + α/2 ẑ_iᵀMẑ_i]`
/// plus `γ/2 Σ_i w_i ‖u_i‖²_M` or `δ/2 Σ_i w_i ‖g_i‖²_{M^∂}`, with
/// `z̄ = Σ_j w_j z_j`. J2 replaces the tracking part by `α/2 ‖z̄ − ẑ̄‖²`.
pub fn colloc_cost(
    spec: &ControlSpec,
    sys: &CollocSystem,
    sol: &CollocSolution,
    data: &CollocData,
) -> Result<crate::oneshot::CostBreakdown> {
    let (n, q) = (sys.n(), sol.len());
    data.check(n, q)?;
    let w = sol.grid.weights();
    let m = &*sys.mass;
    let zbar = sol.mean_state();
    let (alpha, beta) = (spec.alpha, spec.beta);
    let mut j1_track = 0.0;
    let mut tracking = 0.0;
    let mut second = 0.0;
    let mut control = 0.0;
    let mut mz = vec![0.0; n];
    for i in 0..q {
        let z = &sol.state[i];
        let zh = data.target_at(i);
        m.mul_vec(z, &mut mz);
        let zz = crate::linalg::dot(z, &mz);
        let zzh = crate::linalg::dot(zh, &mz);
        let zzb = crate::linalg::dot(&zbar, &mz);
        let zhzh = m.quad_form(zh, zh);
        j1_track += w[i] * ((alpha + beta) / 2.0 * zz - alpha * zzh - beta / 2.0 * zzb + alpha / 2.0 * zhzh);
        tracking += w[i] * (zz - 2.0 * zzh + zhzh);
        second += w[i] * zz;
        let cm = sys.control_mass(spec.channel);
        control += w[i] * cm.quad_form(&sol.control[i], &sol.control[i]);
    }
    let std_sq = second - m.quad_form(&zbar, &zbar);
    let pen = match spec.channel {
        Channel::Distributive => spec.gamma,
        Channel::Boundary => spec.delta,
    };
    let (j, tracking) = match spec.functional {
        Functional::J1 => (j1_track + 0.5 * pen * control, tracking),
        Functional::J2 => {
            let all: Vec<Vec<f64>> = (0..q).map(|i| data.target_at(i).to_vec()).collect();
            let that = weighted_mean(w, &all);
            let d: Vec<f64> = zbar.iter().zip(&that).map(|(a, b)| a - b).collect();
            let tr = m.quad_form(&d, &d);
            (0.5 * alpha * tr + 0.5 * beta * std_sq + 0.5 * pen * control, tr)
        }
    };
    Ok(crate::oneshot::CostBreakdown { j, tracking, std_sq })
}

/// Write `point,y1..yL,weight`.
pub fn write_weights_csv(path: &Path, grid: &SparseGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["point".to_string()];
    header.extend((1..=grid.dim()).map(|d| format!("y{d}")));
    header.push("weight".into());
    w.write_record(&header)?;
    for (i, (y, wt)) in grid.points().iter().zip(grid.weights()).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(y.iter().map(|v| format!("{v:.17e}")));
        rec.push(format!("{wt:.17e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write one `state_<i>.csv` per collocation point into `dir`.
pub fn write_snapshots(dir: &Path, space: &FeSpace, sol: &CollocSolution) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, z) in sol.state.iter().enumerate() {
        write_field_csv(&dir.join(format!("state_{i}.csv")), space, z)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
