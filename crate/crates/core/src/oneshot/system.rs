//! Assembly of the reduced one-shot system and the H1 saddle-point system,
//! control recovery and cost evaluation.

use std::sync::Arc;

use super::field::StochasticField;
use super::kron::KronOperator;
use super::spec::{t_matrix, Channel, ControlSpec, Functional, Regularization};
use crate::error::{Error, Result};
use crate::fem::{assemble_boundary_mass, assemble_mass, assemble_stiffness, FeSpace};
use crate::gpc::{GpcBasis, Zeta};
use crate::linalg::{SparseMat, TripletBuilder};
use crate::randfield::KlField;

/// Spatial and stochastic ingredients shared by every one-shot system on
/// one mesh: `M`, `M^∂`, the unit Laplacian `K`, and the pairs `(C_i, K_i)`
/// of the coefficient expansion (`C_1 = I`, `K_1` from the mean).
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub space: FeSpace,
    pub basis: GpcBasis,
    pub mass: Arc<SparseMat>,
    pub boundary_mass: Arc<SparseMat>,
    pub laplacian: Arc<SparseMat>,
    pub stiffness: Vec<Arc<SparseMat>>,
    pub couplings: Vec<SparseMat>,
    pub gradient: SparseMat,
}

impl GalerkinSystem {
    pub fn new(space: FeSpace, field: &KlField, basis: GpcBasis) -> Result<Self> {
        let mass = Arc::new(assemble_mass(&space));
        let boundary_mass = Arc::new(assemble_boundary_mass(&space));
        let laplacian = Arc::new(assemble_stiffness(&space, &|_, _| 1.0));
        let mean = field.mean;
        let mut stiffness = vec![Arc::new(assemble_stiffness(&space, &|_, _| mean))];
        let mut couplings = vec![basis.coupling_matrix(Zeta::One)?];
        for (m, &slot) in field.slots().iter().enumerate() {
            if slot >= basis.dim() {
                return Err(Error::DimensionMismatch {
                    expected: slot + 1,
                    got: basis.dim(),
                });
            }
            stiffness.push(Arc::new(assemble_stiffness(&space, &|x1, x2| field.mode(m, x1, x2))));
            couplings.push(basis.coupling_matrix(Zeta::Coord(slot))?);
        }
        let gradient = basis.gradient_matrix();
        Ok(Self {
            space,
            basis,
            mass,
            boundary_mass,
            laplacian,
            stiffness,
            couplings,
            gradient,
        })
    }

    /// Spatial size `N`.
    pub fn n(&self) -> usize {
        self.space.ndofs()
    }

    /// Basis size `Q`.
    pub fn q(&self) -> usize {
        self.basis.len()
    }

    /// Mass matrix the control acts through.
    pub fn control_mass(&self, channel: Channel) -> &Arc<SparseMat> {
        match channel {
            Channel::Distributive => &self.mass,
            Channel::Boundary => &self.boundary_mass,
        }
    }
}

/// Right-hand-side data of a one-shot system.
#[derive(Debug, Clone)]
pub struct RhsData {
    /// Fixed state loads (sources, prescribed fluxes), one vector per block.
    pub load: StochasticField,
    /// Known control perturbation `u'` or `g'` as coefficients; used only
    /// when `epsilon = 1`.
    pub perturbation: Option<StochasticField>,
    /// Target coefficients `ẑ`.
    pub target: StochasticField,
}

impl RhsData {
    /// No loads, no perturbation, zero target.
    pub fn zeros(n: usize) -> Self {
        Self {
            load: StochasticField::zeros(n, 1),
            perturbation: None,
            target: StochasticField::zeros(n, 1),
        }
    }
}

fn block_pattern(blocks: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> SparseMat {
    let mut t = TripletBuilder::new(blocks, blocks);
    for (r, c, v) in entries {
        t.push(r, c, v);
    }
    t.build()
}

fn embed(c: &SparseMat, row_off: usize, col_off: usize, scale: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    c.iter().map(move |(r, k, v)| (r + row_off, k + col_off, scale * v))
}

fn diag_entries(d: &[f64], row_off: usize, col_off: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    d.iter().enumerate().map(move |(i, &v)| (row_off + i, col_off + i, v))
}

/// `Σ_i blockdiag(C_i, C_i) ⊗ K_i + [[0, T₁], [T₂, 0]] ⊗ (M^c, M)` for the
/// state/adjoint unknowns `(z_1..z_Q, λ_1..λ_Q)`.
///
/// `T₁ = T(1/p, −ε/p)` with `p = γ` (coupling through `M`) or `p = δ`
/// (coupling through `M^∂`); `T₂ = T(−α, −β)` for J1 and `T(−α, α−β)` for J2.
pub fn reduced_operator(spec: &ControlSpec, sys: &GalerkinSystem) -> Result<KronOperator> {
    spec.validate()?;
    if spec.regularization != Regularization::L2 {
        return Err(Error::Unsupported("the reduced system needs L2 regularization".into()));
    }
    let q = sys.q();
    let b = 2 * q;
    let mut op = KronOperator::new(sys.n(), b);
    for (c, k) in sys.couplings.iter().zip(&sys.stiffness) {
        let pat = block_pattern(b, embed(c, 0, 0, 1.0).chain(embed(c, q, q, 1.0)));
        op.push(pat, k.clone())?;
    }
    let p = spec.penalty();
    let eps = spec.epsilon as f64;
    let t1 = t_matrix(1.0 / p, -eps / p, q);
    op.push(block_pattern(b, diag_entries(&t1, 0, q)), sys.control_mass(spec.channel).clone())?;
    let (w0, w1) = spec.adjoint_weights();
    let t2 = t_matrix(-w0, w0 - w1, q);
    op.push(block_pattern(b, diag_entries(&t2, q, 0)), sys.mass.clone())?;
    Ok(op)
}

/// Stochastic Galerkin state operator `Σ_i C_i ⊗ K_i` (symmetric positive
/// definite for a uniformly positive coefficient).
pub fn forward_operator(sys: &GalerkinSystem) -> Result<KronOperator> {
    let mut op = KronOperator::new(sys.n(), sys.q());
    for (c, k) in sys.couplings.iter().zip(&sys.stiffness) {
        op.push(c.clone(), k.clone())?;
    }
    Ok(op)
}

/// State rows `load_q + ε M^c u'_q`, adjoint rows `−α M ẑ_q` (J2: mean only).
pub fn reduced_rhs(spec: &ControlSpec, sys: &GalerkinSystem, data: &RhsData) -> Result<Vec<f64>> {
    let (n, q) = (sys.n(), sys.q());
    check_data(data, n)?;
    let mut rhs = vec![0.0; 2 * n * q];
    let load = data.load.resized(q);
    rhs[..n * q].copy_from_slice(load.data());
    if spec.mean_only() {
        if let Some(p) = &data.perturbation {
            let p = p.resized(q);
            let mc = sys.control_mass(spec.channel);
            for k in 0..q {
                mc.mul_vec_add(1.0, p.block(k), &mut rhs[k * n..(k + 1) * n]);
            }
        }
    }
    let target = data.target.resized(q);
    let tracked = match spec.functional {
        Functional::J1 => q,
        Functional::J2 => 1,
    };
    for k in 0..tracked {
        let off = (q + k) * n;
        sys.mass.mul_vec_add(-spec.alpha, target.block(k), &mut rhs[off..off + n]);
    }
    Ok(rhs)
}

fn check_data(data: &RhsData, n: usize) -> Result<()> {
    for f in [Some(&data.load), data.perturbation.as_ref(), Some(&data.target)].into_iter().flatten() {
        if f.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.n() });
        }
    }
    Ok(())
}

/// Reduced operator and right-hand side, length `2NQ`.
pub fn assemble_reduced(spec: &ControlSpec, sys: &GalerkinSystem, data: &RhsData) -> Result<(KronOperator, Vec<f64>)> {
    Ok((reduced_operator(spec, sys)?, reduced_rhs(spec, sys, data)?))
}

/// Symmetric saddle operator in the ordering `(z, u, λ)`:
///
/// `[[T⊗M, 0, −ΣC_i⊗K_i], [0, γ(I+E)⊗(M+K), I⊗M], [−ΣC_i⊗K_i, I⊗M, 0]]`
///
/// with `T = T(α, β)` (J1) or `T(α, β−α)` (J2). With `epsilon = 1` the
/// fluctuation blocks of `u` are pinned to the prescribed perturbation and
/// decoupled from the state equation.
pub fn saddle_operator(spec: &ControlSpec, sys: &GalerkinSystem) -> Result<KronOperator> {
    spec.validate()?;
    if spec.regularization != Regularization::H1 {
        return Err(Error::Unsupported("the saddle system is used for H1 regularization".into()));
    }
    if spec.channel == Channel::Boundary {
        return Err(Error::Unsupported("H1 regularization of a boundary control".into()));
    }
    let q = sys.q();
    let b = 3 * q;
    let (zo, uo, lo) = (0, q, 2 * q);
    let mut op = KronOperator::new(sys.n(), b);
    let (w0, w1) = spec.adjoint_weights();
    op.push(block_pattern(b, diag_entries(&t_matrix(w0, w1 - w0, q), zo, zo)), sys.mass.clone())?;
    for (c, k) in sys.couplings.iter().zip(&sys.stiffness) {
        let pat = block_pattern(b, embed(c, lo, zo, -1.0).chain(embed(c, zo, lo, -1.0)));
        op.push(pat, k.clone())?;
    }
    let g = spec.gamma;
    if spec.mean_only() {
        let mut dm = vec![1.0; q];
        dm[0] = g;
        let mut dk = vec![0.0; q];
        dk[0] = g;
        op.push(block_pattern(b, diag_entries(&dm, uo, uo)), sys.mass.clone())?;
        op.push(block_pattern(b, diag_entries(&dk, uo, uo)), sys.laplacian.clone())?;
        let pat = block_pattern(b, [(lo, uo, 1.0), (uo, lo, 1.0)]);
        op.push(pat, sys.mass.clone())?;
    } else {
        let ie = SparseMat::linear_combination(1.0, &SparseMat::identity(q), 1.0, &sys.gradient);
        op.push(block_pattern(b, embed(&ie, uo, uo, g)), sys.mass.clone())?;
        op.push(block_pattern(b, embed(&ie, uo, uo, g)), sys.laplacian.clone())?;
        let id: Vec<f64> = vec![1.0; q];
        let pat = block_pattern(b, diag_entries(&id, lo, uo).chain(diag_entries(&id, uo, lo)));
        op.push(pat, sys.mass.clone())?;
    }
    Ok(op)
}

/// `z` rows `α M ẑ_q` (J2: mean only), `u` rows `M u'_q` for pinned blocks,
/// `λ` rows `−load_q` minus the pinned perturbation.
pub fn saddle_rhs(spec: &ControlSpec, sys: &GalerkinSystem, data: &RhsData) -> Result<Vec<f64>> {
    let (n, q) = (sys.n(), sys.q());
    check_data(data, n)?;
    let mut rhs = vec![0.0; 3 * n * q];
    let target = data.target.resized(q);
    let tracked = match spec.functional {
        Functional::J1 => q,
        Functional::J2 => 1,
    };
    for k in 0..tracked {
        sys.mass.mul_vec_add(spec.alpha, target.block(k), &mut rhs[k * n..(k + 1) * n]);
    }
    let load = data.load.resized(q);
    for k in 0..q {
        let off = (2 * q + k) * n;
        for (r, l) in rhs[off..off + n].iter_mut().zip(load.block(k)) {
            *r = -l;
        }
    }
    if spec.mean_only() {
        if let Some(p) = &data.perturbation {
            let p = p.resized(q);
            for k in 1..q {
                let uo = (q + k) * n;
                sys.mass.mul_vec_add(1.0, p.block(k), &mut rhs[uo..uo + n]);
                let lo = (2 * q + k) * n;
                sys.mass.mul_vec_add(-1.0, p.block(k), &mut rhs[lo..lo + n]);
            }
        }
    }
    Ok(rhs)
}

/// Saddle operator and right-hand side, length `3NQ`.
pub fn assemble_saddle(spec: &ControlSpec, sys: &GalerkinSystem, data: &RhsData) -> Result<(KronOperator, Vec<f64>)> {
    Ok((saddle_operator(spec, sys)?, saddle_rhs(spec, sys, data)?))
}

/// Split a solution vector into `blocks / Q` fields of `Q` blocks each.
pub fn split_solution(x: &[f64], n: usize, q: usize) -> Vec<StochasticField> {
    x.chunks(n * q)
        .map(|c| StochasticField::from_vec(n, q, c.to_vec()).expect("chunk size"))
        .collect()
}

/// Control from the adjoint: `u = −λ/p` blockwise (`epsilon = 0`), or the
/// deterministic `ū = −λ_1/p` (`epsilon = 1`), with `p = γ` or `δ`.
pub fn recover_control(spec: &ControlSpec, lambda: &StochasticField) -> Result<StochasticField> {
    let p = spec.penalty();
    if p == 0.0 {
        return Err(Error::InvalidSpec("control penalty is zero".into()));
    }
    if spec.mean_only() {
        Ok(StochasticField::deterministic(lambda.mean().iter().map(|v| -v / p).collect()))
    } else {
        let data = lambda.data().iter().map(|v| -v / p).collect();
        StochasticField::from_vec(lambda.n(), lambda.q(), data)
    }
}

/// Scalars reported for every solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub j: f64,
    /// `‖z − ẑ‖²` (J1) or `‖z̄ − ẑ‖²` (J2).
    pub tracking: f64,
    /// `‖std(z)‖²`
    pub std_sq: f64,
}

/// Evaluate J1 or J2 for Galerkin fields; `u` is the distributive control
/// (perturbation included), `g` the boundary control.
pub fn eval_cost(
    spec: &ControlSpec,
    sys: &GalerkinSystem,
    z: &StochasticField,
    u: Option<&StochasticField>,
    g: Option<&StochasticField>,
    target: &StochasticField,
) -> Result<CostBreakdown> {
    let m = &*sys.mass;
    let q = z.q().max(target.q());
    let mut diff = z.resized(q);
    for (d, t) in diff.data_mut().iter_mut().zip(target.resized(q).data()) {
        *d -= t;
    }
    let tracking = match spec.functional {
        Functional::J1 => diff.norm_sq(m),
        Functional::J2 => m.quad_form(diff.mean(), diff.mean()),
    };
    let std_sq = z.fluctuation_norm_sq(m);
    let mut j = 0.5 * spec.alpha * tracking + 0.5 * spec.beta * std_sq;
    if let Some(u) = u {
        let norm = match spec.regularization {
            Regularization::L2 => u.norm_sq(m),
            Regularization::H1 => h1_norm_sq(sys, u)?,
        };
        j += 0.5 * spec.gamma * norm;
    }
    if let Some(g) = g {
        j += 0.5 * spec.delta * g.norm_sq(&sys.boundary_mass);
    }
    Ok(CostBreakdown { j, tracking, std_sq })
}

/// `Σ_{q,r} (I + E)_{qr} u_qᵀ (M + K) u_r`
fn h1_norm_sq(sys: &GalerkinSystem, u: &StochasticField) -> Result<f64> {
    if u.q() > sys.q() {
        return Err(Error::DimensionMismatch {
            expected: sys.q(),
            got: u.q(),
        });
    }
    let n = u.n();
    let mut total = 0.0;
    let mut w = vec![0.0; n];
    for r in 0..u.q() {
        sys.mass.mul_vec(u.block(r), &mut w);
        sys.laplacian.mul_vec_add(1.0, u.block(r), &mut w);
        for qq in 0..u.q() {
            let e = if qq == r { 1.0 } else { 0.0 } + sys.gradient.get(qq, r);
            if e != 0.0 {
                total += e * crate::linalg::dot(u.block(qq), &w);
            }
        }
    }
    Ok(total)
}
