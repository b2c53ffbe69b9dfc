//! Block preconditioners built from the mean stiffness `K_1`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, LinearOperator, SparseMat, TripletBuilder};
use crate::oneshot::{ControlSpec, GalerkinSystem, Regularization};

/// Direct solver for one state/adjoint pair `[[K, a·Mc], [b·M, K]]` acting
/// on block-major `[z; λ]`, factored once with node-interleaved unknowns.
#[derive(Debug, Clone)]
pub struct PairSolver {
    n: usize,
    lu: BandedLu,
}

impl PairSolver {
    pub fn new(k: &SparseMat, mc: &SparseMat, a: f64, m: &SparseMat, b: f64) -> Result<Self> {
        let n = k.nrows();
        for x in [mc, m] {
            if x.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, got: x.nrows() });
            }
        }
        let mut t = TripletBuilder::with_capacity(2 * n, 2 * n, 2 * k.nnz() + mc.nnz() + m.nnz());
        for (r, c, v) in k.iter() {
            t.push(2 * r, 2 * c, v);
            t.push(2 * r + 1, 2 * c + 1, v);
        }
        for (r, c, v) in mc.iter() {
            t.push(2 * r, 2 * c + 1, a * v);
        }
        for (r, c, v) in m.iter() {
            t.push(2 * r + 1, 2 * c, b * v);
        }
        Ok(Self {
            n,
            lu: BandedLu::factor(&t.build())?,
        })
    }

    /// Solve in place on `z` and `λ` slices of length `N`.
    pub fn solve_pair(&self, z: &mut [f64], lambda: &mut [f64], work: &mut Vec<f64>) {
        let n = self.n;
        work.resize(2 * n, 0.0);
        for i in 0..n {
            work[2 * i] = z[i];
            work[2 * i + 1] = lambda[i];
        }
        self.lu.solve_in_place(work);
        for i in 0..n {
            z[i] = work[2 * i];
            lambda[i] = work[2 * i + 1];
        }
    }
}

impl LinearOperator for PairSolver {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        let (z, l) = y.split_at_mut(self.n);
        self.solve_pair(z, l, &mut Vec::new());
    }
}

/// `P_mean = I_{2Q} ⊗ K_1 + [[0, 1/p], [−α, 0]] ⊗ I_Q ⊗ (M^c, M)`.
///
/// Applying the inverse solves `Q` independent `2N × 2N` systems pairing
/// `z_q` with `λ_q`, all sharing one factorization.
#[derive(Debug, Clone)]
pub struct MeanBasedPreconditioner {
    n: usize,
    q: usize,
    pair: PairSolver,
}

impl MeanBasedPreconditioner {
    pub fn new(spec: &ControlSpec, sys: &GalerkinSystem) -> Result<Self> {
        let p = spec.penalty();
        if !(p > 0.0) {
            return Err(Error::InvalidSpec("mean-based preconditioner needs a positive control penalty".into()));
        }
        let pair = PairSolver::new(&sys.stiffness[0], sys.control_mass(spec.channel), 1.0 / p, &sys.mass, -spec.alpha)?;
        Ok(Self {
            n: sys.n(),
            q: sys.q(),
            pair,
        })
    }

    /// Number of stochastic blocks `Q`.
    pub fn q(&self) -> usize {
        self.q
    }
}

impl LinearOperator for MeanBasedPreconditioner {
    fn dim(&self) -> usize {
        2 * self.n * self.q
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n, q) = (self.n, self.q);
        y.copy_from_slice(x);
        let (zs, ls) = y.split_at_mut(n * q);
        let mut work = Vec::with_capacity(2 * n);
        for (z, l) in zs.chunks_mut(n).zip(ls.chunks_mut(n)) {
            self.pair.solve_pair(z, l, &mut work);
        }
    }
}

/// Symmetric positive definite block-diagonal preconditioner for the
/// `(z, u, λ)` saddle system, for use with MINRES.
///
/// Per stochastic index `q` with tracking weight `t_q` (floored at
/// `floor`): `z` block `t_q diag(M)`, `u` block `γ(1 + E_qq)(M + K)`, and
/// `λ` block approximating `K M⁻¹ K / t_q + M/γ` by
/// `(K + cM) M⁻¹ (K + cM) / t_q` with `c = sqrt(t_q/γ)`.
#[derive(Debug, Clone)]
pub struct SaddleBlockPreconditioner {
    n: usize,
    q: usize,
    mass: Arc<SparseMat>,
    lumped: Vec<f64>,
    weights: Vec<f64>,
    u_scale: Vec<f64>,
    u_lu: BandedLu,
    /// Distinct `t_q` values with their `K + cM` factorizations.
    schur: Vec<(f64, BandedLu)>,
}

impl SaddleBlockPreconditioner {
    pub fn new(spec: &ControlSpec, sys: &GalerkinSystem) -> Result<Self> {
        if spec.regularization != Regularization::H1 {
            return Err(Error::Unsupported("saddle preconditioner is for H1 regularization".into()));
        }
        let g = spec.gamma;
        if !(g > 0.0) {
            return Err(Error::InvalidSpec("H1 regularization needs gamma > 0".into()));
        }
        let (n, q) = (sys.n(), sys.q());
        let (w0, w1) = spec.adjoint_weights();
        let floor = 1e-2 * spec.alpha.max(spec.beta).max(f64::MIN_POSITIVE);
        let weights: Vec<f64> = (0..q).map(|k| if k == 0 { w0 } else { w1 }.max(floor)).collect();
        let mass = sys.mass.clone();
        let lumped: Vec<f64> = (0..n).map(|i| mass.row(i).1.iter().sum()).collect();
        let mk = SparseMat::linear_combination(1.0, &mass, 1.0, &sys.laplacian);
        let u_lu = BandedLu::factor(&mk)?;
        let u_scale = (0..q)
            .map(|k| {
                if spec.mean_only() && k > 0 {
                    // pinned perturbation blocks carry only `M`
                    0.0
                } else {
                    g * (1.0 + sys.gradient.get(k, k))
                }
            })
            .collect();
        let mut schur: Vec<(f64, BandedLu)> = Vec::new();
        for &t in &weights {
            if !schur.iter().any(|(s, _)| *s == t) {
                let c = (t / g).sqrt();
                let a = SparseMat::linear_combination(1.0, &sys.stiffness[0], c, &mass);
                schur.push((t, BandedLu::factor(&a)?));
            }
        }
        Ok(Self {
            n,
            q,
            mass,
            lumped,
            weights,
            u_scale,
            u_lu,
            schur,
        })
    }
}

impl LinearOperator for SaddleBlockPreconditioner {
    fn dim(&self) -> usize {
        3 * self.n * self.q
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n, q) = (self.n, self.q);
        let mut w = vec![0.0; n];
        for k in 0..q {
            let t = self.weights[k];
            let zo = k * n;
            for i in 0..n {
                y[zo + i] = x[zo + i] / (t * self.lumped[i]);
            }
            let uo = (q + k) * n;
            if self.u_scale[k] == 0.0 {
                for i in 0..n {
                    y[uo + i] = x[uo + i] / self.lumped[i];
                }
            } else {
                w.copy_from_slice(&x[uo..uo + n]);
                self.u_lu.solve_in_place(&mut w);
                for i in 0..n {
                    y[uo + i] = w[i] / self.u_scale[k];
                }
            }
            let lo = (2 * q + k) * n;
            let lu = &self.schur.iter().find(|(s, _)| *s == t).expect("factor per weight").1;
            w.copy_from_slice(&x[lo..lo + n]);
            lu.solve_in_place(&mut w);
            let mut mw = vec![0.0; n];
            self.mass.mul_vec(&w, &mut mw);
            lu.solve_in_place(&mut mw);
            for i in 0..n {
                y[lo + i] = t * mw[i];
            }
        }
    }
}

/// `I_Q ⊗ K_1⁻¹` for the stochastic Galerkin state operator.
#[derive(Debug, Clone)]
pub struct MeanStiffnessPreconditioner {
    n: usize,
    q: usize,
    lu: BandedLu,
}

impl MeanStiffnessPreconditioner {
    pub fn new(sys: &GalerkinSystem) -> Result<Self> {
        Ok(Self {
            n: sys.n(),
            q: sys.q(),
            lu: BandedLu::factor(&sys.stiffness[0])?,
        })
    }
}

impl LinearOperator for MeanStiffnessPreconditioner {
    fn dim(&self) -> usize {
        self.n * self.q
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        for b in y.chunks_mut(self.n) {
            self.lu.solve_in_place(b);
        }
    }
}
