//! Oracles shared by the integration tests.

#![allow(dead_code)]

pub mod dd;

use sfemctl::fem::FeSpace;
use sfemctl::gpc::{gauss_rule, Family, GpcBasis};
use sfemctl::linalg::SparseMat;
use sfemctl::oneshot::{
    eval_cost, forward_operator, Channel, ControlSpec, CostBreakdown, Functional, GalerkinSystem, RhsData,
    StochasticField,
};
use sfemctl::solve::{krylov_solve, KrylovConfig, KrylovMethod, MeanStiffnessPreconditioner};

/// Tensor Gauss rule with `points` nodes per coordinate, as `(y, w)` pairs.
pub fn tensor_rule(families: &[Family], points: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for &fam in families {
        let r = gauss_rule(fam, points);
        let mut next = Vec::with_capacity(out.len() * points);
        for (y, w) in &out {
            for (x, v) in r.nodes.iter().zip(&r.weights) {
                let mut y2 = y.clone();
                y2.push(*x);
                next.push((y2, w * v));
            }
        }
        out = next;
    }
    out
}

/// `∂ψ_j/∂y_m` at `y`.
pub fn basis_derivative(basis: &GpcBasis, j: usize, m: usize, y: &[f64]) -> f64 {
    let idx = basis.multi_index(j).unwrap();
    let mut v = 1.0;
    for (k, (&d, fam)) in idx.0.iter().zip(basis.families()).enumerate() {
        let (vals, ders) = fam.eval_with_derivative(d, y[k]);
        v *= if k == m { ders[d] } else { vals[d] };
    }
    v
}

/// Dense row-major copy.
pub fn dense(a: &SparseMat) -> Vec<f64> {
    a.to_dense()
}

/// Dense `Σ_blocks pattern[r][c] · A` assembly helper: adds `s·A` at block
/// `(r, c)` of a `blocks·n` square matrix.
pub fn add_block(out: &mut [f64], blocks: usize, n: usize, r: usize, c: usize, s: f64, a: &[f64]) {
    let dim = blocks * n;
    for i in 0..n {
        for j in 0..n {
            out[(r * n + i) * dim + c * n + j] += s * a[i * n + j];
        }
    }
}

pub fn dense_apply(a: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum()).collect()
}

/// Forward solve `Σ C_i ⊗ K_i z = rhs` to near machine precision.
pub fn forward_solve(sys: &GalerkinSystem, rhs: &[f64]) -> Vec<f64> {
    let op = forward_operator(sys).unwrap();
    let pre = MeanStiffnessPreconditioner::new(sys).unwrap();
    let cfg = KrylovConfig {
        method: KrylovMethod::Cg,
        rel_tol: 1e-14,
        max_iter: 2000,
        restart: None,
    };
    krylov_solve(&op, rhs, &pre, &cfg).unwrap().0
}

/// Reduced cost `J(u)` with the state re-solved from the state equation.
///
/// With `epsilon = 1`, `u` is the deterministic part and the prescribed
/// perturbation in `data` is added to it.
pub fn reduced_cost(spec: &ControlSpec, sys: &GalerkinSystem, data: &RhsData, u: &StochasticField) -> CostBreakdown {
    let (n, q) = (sys.n(), sys.q());
    let mut total = u.resized(q);
    if spec.mean_only() {
        if let Some(p) = &data.perturbation {
            total = total.add(&p.resized(q)).unwrap();
        }
    }
    let mc = sys.control_mass(spec.channel);
    let mut rhs = data.load.resized(q).into_vec();
    for k in 0..q {
        mc.mul_vec_add(1.0, total.block(k), &mut rhs[k * n..(k + 1) * n]);
    }
    let z = StochasticField::from_vec(n, q, forward_solve(sys, &rhs)).unwrap();
    match spec.channel {
        Channel::Distributive => eval_cost(spec, sys, &z, Some(&total), None, &data.target).unwrap(),
        Channel::Boundary => eval_cost(spec, sys, &z, None, Some(&total), &data.target).unwrap(),
    }
}

/// Central difference of `J` along control dof `(block, dof)`.
pub fn fd_gradient(
    spec: &ControlSpec,
    sys: &GalerkinSystem,
    data: &RhsData,
    u: &StochasticField,
    block: usize,
    dof: usize,
    h: f64,
) -> f64 {
    let mut up = u.clone();
    up.block_mut(block)[dof] += h;
    let mut dn = u.clone();
    dn.block_mut(block)[dof] -= h;
    (reduced_cost(spec, sys, data, &up).j - reduced_cost(spec, sys, data, &dn).j) / (2.0 * h)
}

pub fn unit_square(n: usize) -> FeSpace {
    FeSpace::unit_square(n).unwrap()
}

/// Dense `Σ_i blockdiag(C_i, C_i) ⊗ K_i + [[0, T₁], [T₂, 0]] ⊗ (M^c, M)`.
pub fn dense_reduced(spec: &ControlSpec, sys: &GalerkinSystem) -> Vec<f64> {
    let (n, q) = (sys.n(), sys.q());
    let b = 2 * q;
    let mut a = vec![0.0; (b * n) * (b * n)];
    for (c, k) in sys.couplings.iter().zip(&sys.stiffness) {
        let kd = dense(k);
        for r in 0..q {
            for s in 0..q {
                let v = c.get(r, s);
                if v != 0.0 {
                    add_block(&mut a, b, n, r, s, v, &kd);
                    add_block(&mut a, b, n, q + r, q + s, v, &kd);
                }
            }
        }
    }
    let p = spec.penalty();
    let eps = spec.epsilon as f64;
    let mc = dense(sys.control_mass(spec.channel));
    let m = dense(&sys.mass);
    for r in 0..q {
        let t1 = if r == 0 { 1.0 / p } else { (1.0 - eps) / p };
        let t2 = match (spec.functional, r) {
            (_, 0) => -spec.alpha,
            (Functional::J1, _) => -(spec.alpha + spec.beta),
            (Functional::J2, _) => -spec.beta,
        };
        add_block(&mut a, b, n, r, q + r, t1, &mc);
        add_block(&mut a, b, n, q + r, r, t2, &m);
    }
    a
}

/// Dense `(z, u, λ)` saddle matrix for H1 regularization.
pub fn dense_saddle(spec: &ControlSpec, sys: &GalerkinSystem) -> Vec<f64> {
    let (n, q) = (sys.n(), sys.q());
    let b = 3 * q;
    let mut a = vec![0.0; (b * n) * (b * n)];
    let m = dense(&sys.mass);
    let lap = dense(&sys.laplacian);
    let mpk: Vec<f64> = m.iter().zip(&lap).map(|(x, y)| x + y).collect();
    for r in 0..q {
        let t = match (spec.functional, r) {
            (_, 0) => spec.alpha,
            (Functional::J1, _) => spec.alpha + spec.beta,
            (Functional::J2, _) => spec.beta,
        };
        add_block(&mut a, b, n, r, r, t, &m);
    }
    for (c, k) in sys.couplings.iter().zip(&sys.stiffness) {
        let kd = dense(k);
        for r in 0..q {
            for s in 0..q {
                let v = c.get(r, s);
                if v != 0.0 {
                    add_block(&mut a, b, n, 2 * q + r, s, -v, &kd);
                    add_block(&mut a, b, n, r, 2 * q + s, -v, &kd);
                }
            }
        }
    }
    for r in 0..q {
        if spec.epsilon == 1 {
            if r == 0 {
                add_block(&mut a, b, n, q, q, spec.gamma, &mpk);
                add_block(&mut a, b, n, 2 * q, q, 1.0, &m);
                add_block(&mut a, b, n, q, 2 * q, 1.0, &m);
            } else {
                add_block(&mut a, b, n, q + r, q + r, 1.0, &m);
            }
        } else {
            for s in 0..q {
                let ie = f64::from(u8::from(r == s)) + sys.gradient.get(r, s);
                if ie != 0.0 {
                    add_block(&mut a, b, n, q + r, q + s, spec.gamma * ie, &mpk);
                }
            }
            add_block(&mut a, b, n, 2 * q + r, q + r, 1.0, &m);
            add_block(&mut a, b, n, q + r, 2 * q + r, 1.0, &m);
        }
    }
    a
}
