//! Krylov iterations: restarted right-preconditioned GMRES, preconditioned
//! MINRES and preconditioned conjugate gradients.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, LinearOperator};

/// Iteration family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KrylovMethod {
    /// Restarted GMRES for general (nonsymmetric) systems.
    Gmres,
    /// MINRES for symmetric indefinite systems with an SPD preconditioner.
    Minres,
    /// Conjugate gradients for SPD systems with an SPD preconditioner.
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrylovConfig {
    pub method: KrylovMethod,
    pub rel_tol: f64,
    pub max_iter: usize,
    /// GMRES restart length.
    pub restart: Option<usize>,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            method: KrylovMethod::Gmres,
            rel_tol: 1e-8,
            max_iter: 500,
            restart: Some(40),
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::InvalidArgument(format!("rel_tol must lie in (0, 1), got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidArgument("restart length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖` recomputed from the returned iterate.
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

fn true_residual(op: &dyn LinearOperator, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

/// Solve `op x = rhs` with the configured method and preconditioner.
///
/// Breakdown or exhaustion of `max_iter` yields a report with
/// `converged = false`; the best iterate is still returned.
pub fn krylov_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: &dyn LinearOperator,
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    krylov_solve_from(op, rhs, precond, cfg, vec![0.0; rhs.len()])
}

/// As [`krylov_solve`], starting from `x0`.
pub fn krylov_solve_from(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: &dyn LinearOperator,
    cfg: &KrylovConfig,
    x0: Vec<f64>,
) -> Result<(Vec<f64>, SolveReport)> {
    cfg.validate()?;
    let n = rhs.len();
    for (what, d) in [("operator", op.dim()), ("preconditioner", precond.dim()), ("initial guess", x0.len())] {
        if d != n {
            log::debug!("{what} dimension {d} does not match rhs {n}");
            return Err(Error::DimensionMismatch { expected: n, got: d });
        }
    }
    let start = Instant::now();
    let (x, iterations) = match cfg.method {
        KrylovMethod::Gmres => gmres(op, rhs, precond, cfg, x0),
        KrylovMethod::Minres => minres(op, rhs, precond, cfg, x0),
        KrylovMethod::Cg => pcg(op, rhs, precond, cfg, x0),
    };
    let bnorm = norm2(rhs);
    let mut r = vec![0.0; n];
    let res = true_residual(op, &x, rhs, &mut r);
    let rel = if bnorm == 0.0 { res } else { res / bnorm };
    let report = SolveReport {
        iterations,
        final_relative_residual: rel,
        converged: rel <= cfg.rel_tol,
        wall_time: start.elapsed().as_secs_f64(),
    };
    log::debug!("{:?}: {} iterations, residual {:.3e}", cfg.method, iterations, rel);
    Ok((x, report))
}

fn gmres(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn LinearOperator,
    cfg: &KrylovConfig,
    mut x: Vec<f64>,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0);
    }
    let m = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter).max(1);
    let target = cfg.rel_tol * bnorm;
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut total = 0;
    while total < cfg.max_iter {
        let beta = true_residual(op, &x, b, &mut r);
        if beta <= target {
            break;
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < cfg.max_iter {
            precond.apply(&v[k], &mut z);
            op.apply(&z, &mut w);
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                axpy(-h[i][k], &v[i], &mut w);
            }
            // one reorthogonalization pass keeps long cycles stable
            for i in 0..=k {
                let c = dot(&w, &v[i]);
                h[i][k] += c;
                axpy(-c, &v[i], &mut w);
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if d == 0.0 {
                break;
            }
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k += 1;
            total += 1;
            if g[k].abs() <= target || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        if k == 0 {
            break;
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut upd = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &v[i], &mut upd);
        }
        precond.apply(&upd, &mut z);
        axpy(1.0, &z, &mut x);
        if k < m && g[k].abs() > target {
            // breakdown without convergence
            break;
        }
    }
    (x, total)
}

/// Preconditioned MINRES; `precond` must be symmetric positive definite.
fn minres(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn LinearOperator,
    cfg: &KrylovConfig,
    mut x: Vec<f64>,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0);
    }
    let target = cfg.rel_tol * bnorm;
    let mut total = 0;
    let mut r = vec![0.0; n];
    // the recurrence tracks the preconditioned residual; on apparent
    // convergence the true residual decides, restarting if needed
    while total < cfg.max_iter {
        let res0 = true_residual(op, &x, b, &mut r);
        if res0 <= target {
            break;
        }
        let mut v_old = vec![0.0; n];
        let mut v = r.clone();
        let mut z = vec![0.0; n];
        precond.apply(&v, &mut z);
        let g2 = dot(&v, &z);
        if g2 <= 0.0 {
            log::warn!("MINRES preconditioner is not positive definite");
            break;
        }
        let mut gamma = g2.sqrt();
        let eta0 = gamma;
        let ptarget = eta0 * (target / res0) * 0.5;
        let mut gamma_old = 1.0;
        let (mut eta, mut s0, mut s1, mut c0, mut c1) = (gamma, 0.0, 0.0, 1.0, 1.0);
        let mut w0 = vec![0.0; n];
        let mut w1 = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut az = vec![0.0; n];
        let mut z_new = vec![0.0; n];
        let start_total = total;
        let mut breakdown = false;
        while total < cfg.max_iter {
            for zi in z.iter_mut() {
                *zi /= gamma;
            }
            op.apply(&z, &mut az);
            let delta = dot(&az, &z);
            for i in 0..n {
                az[i] -= delta / gamma * v[i] + gamma / gamma_old * v_old[i];
            }
            precond.apply(&az, &mut z_new);
            let g2 = dot(&az, &z_new);
            total += 1;
            if g2 < 0.0 {
                log::warn!("MINRES preconditioner is not positive definite");
                breakdown = true;
                break;
            }
            let gamma_new = g2.sqrt();
            let alpha0 = c1 * delta - c0 * s1 * gamma;
            let alpha1 = (alpha0 * alpha0 + gamma_new * gamma_new).sqrt();
            let alpha2 = s1 * delta + c0 * c1 * gamma;
            let alpha3 = s0 * gamma;
            if alpha1 == 0.0 {
                breakdown = true;
                break;
            }
            c0 = c1;
            s0 = s1;
            c1 = alpha0 / alpha1;
            s1 = gamma_new / alpha1;
            for i in 0..n {
                w2[i] = (z[i] - alpha3 * w0[i] - alpha2 * w1[i]) / alpha1;
            }
            axpy(c1 * eta, &w2, &mut x);
            eta *= -s1;
            std::mem::swap(&mut w0, &mut w1);
            std::mem::swap(&mut w1, &mut w2);
            std::mem::swap(&mut v_old, &mut v);
            std::mem::swap(&mut v, &mut az);
            std::mem::swap(&mut z, &mut z_new);
            gamma_old = gamma;
            gamma = gamma_new;
            if gamma == 0.0 || eta.abs() <= ptarget {
                break;
            }
        }
        if breakdown || total == start_total {
            break;
        }
    }
    (x, total)
}

/// Preconditioned conjugate gradients for SPD operators.
fn pcg(
    op: &dyn LinearOperator,
    b: &[f64],
    precond: &dyn LinearOperator,
    cfg: &KrylovConfig,
    mut x: Vec<f64>,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0);
    }
    let target = cfg.rel_tol * bnorm;
    let mut r = vec![0.0; n];
    true_residual(op, &x, b, &mut r);
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut it = 0;
    while it < cfg.max_iter {
        if norm2(&r) <= target {
            break;
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            log::warn!("CG met a non-positive curvature direction");
            break;
        }
        let a = rz / pap;
        axpy(a, &p, &mut x);
        axpy(-a, &ap, &mut r);
        it += 1;
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, it)
}
