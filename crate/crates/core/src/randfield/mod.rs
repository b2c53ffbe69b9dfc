//! Karhunen–Loève expansions of the random diffusion coefficient and of the
//! prescribed control perturbations.
//!
//! The covariance is the separable exponential kernel
//! `σ² exp(−|x1−x1'|/c) exp(−|x2−x2'|/c)` on an axis-aligned box, so every
//! eigenpair is a product of analytic one-dimensional eigenpairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{write_nodal_csv, TriMesh};

/// Separable exponential covariance on `[lo[0], hi[0]] × [lo[1], hi[1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovarianceSpec {
    pub variance: f64,
    pub corr_length: f64,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        Self {
            variance: 0.25,
            corr_length: 1.0,
            lo: [0.0; 2],
            hi: [1.0; 2],
        }
    }
}

impl CovarianceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !(self.corr_length > 0.0) {
            return Err(Error::InvalidArgument(
                "covariance needs positive variance and correlation length".into(),
            ));
        }
        if (0..2).any(|d| !(self.hi[d] > self.lo[d])) {
            return Err(Error::InvalidArgument("empty covariance domain".into()));
        }
        Ok(())
    }

    /// `C(x, x')`
    pub fn kernel(&self, x: [f64; 2], xp: [f64; 2]) -> f64 {
        self.variance * (-((x[0] - xp[0]).abs() + (x[1] - xp[1]).abs()) / self.corr_length).exp()
    }
}

/// Analytic eigenpair of `exp(−|x−x'|/c)` on an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen1d {
    pub eigenvalue: f64,
    omega: f64,
    even: bool,
    center: f64,
    norm: f64,
}

impl Eigen1d {
    /// Normalized eigenfunction value.
    pub fn eval(&self, x: f64) -> f64 {
        let t = self.omega * (x - self.center);
        if self.even {
            t.cos() / self.norm
        } else {
            t.sin() / self.norm
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mode: usize) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootFinding { mode });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The `count` leading eigenpairs on `[lo, hi]`, eigenvalues non-increasing.
pub fn eigenpairs_1d(corr_length: f64, lo: f64, hi: f64, count: usize) -> Result<Vec<Eigen1d>> {
    let theta = 1.0 / corr_length;
    let a = 0.5 * (hi - lo);
    let center = 0.5 * (hi + lo);
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let even = k % 2 == 0;
        let j = k / 2;
        // even roots of θ cos(ωa) − ω sin(ωa) lie in [jπ/a, (j+½)π/a];
        // odd roots of ω cos(ωa) + θ sin(ωa) in [(j+½)π/a, (j+1)π/a]
        let omega = if even {
            bisect(
                |w| theta * (w * a).cos() - w * (w * a).sin(),
                j as f64 * pi / a,
                (j as f64 + 0.5) * pi / a,
                k,
            )?
        } else {
            bisect(
                |w| w * (w * a).cos() + theta * (w * a).sin(),
                (j as f64 + 0.5) * pi / a,
                (j as f64 + 1.0) * pi / a,
                k,
            )?
        };
        let s = (2.0 * omega * a).sin() / (2.0 * omega);
        let norm = if even { a + s } else { a - s }.sqrt();
        out.push(Eigen1d {
            eigenvalue: 2.0 * theta / (theta * theta + omega * omega),
            omega,
            even,
            center,
            norm,
        });
    }
    Ok(out)
}

/// One product mode `√λ e_j(x1) e_k(x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlMode {
    /// Covariance eigenvalue, variance included.
    pub eigenvalue: f64,
    /// 1D indices `(j, k)` along `x1` and `x2`.
    pub index: (usize, usize),
    e1: Eigen1d,
    e2: Eigen1d,
}

impl KlMode {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.eigenvalue.sqrt() * self.e1.eval(x1) * self.e2.eval(x2)
    }
}

/// Truncated expansion `κ(x, y) = κ_1(x) + Σ_m κ_{m+1}(x) y_{slot(m)}`.
#[derive(Debug, Clone)]
pub struct KlField {
    pub mean: f64,
    pub spec: CovarianceSpec,
    modes: Vec<KlMode>,
    slots: Vec<usize>,
}

/// Leading `n_modes` modes of the separable kernel, mean `offset_mean`.
///
/// Modes are sorted by eigenvalue, ties broken by the `(j, k)` index pair.
/// Mode `m` is driven by stochastic coordinate `m`.
pub fn kl_expand(spec: &CovarianceSpec, n_modes: usize, offset_mean: f64) -> Result<KlField> {
    spec.validate()?;
    if n_modes == 0 {
        return Err(Error::InvalidArgument("KL expansion needs at least one mode".into()));
    }
    let e1 = eigenpairs_1d(spec.corr_length, spec.lo[0], spec.hi[0], n_modes)?;
    let e2 = eigenpairs_1d(spec.corr_length, spec.lo[1], spec.hi[1], n_modes)?;
    let mut modes = Vec::with_capacity(n_modes * n_modes);
    for (j, a) in e1.iter().enumerate() {
        for (k, b) in e2.iter().enumerate() {
            modes.push(KlMode {
                eigenvalue: spec.variance * a.eigenvalue * b.eigenvalue,
                index: (j, k),
                e1: *a,
                e2: *b,
            });
        }
    }
    modes.sort_by(|a, b| {
        b.eigenvalue
            .partial_cmp(&a.eigenvalue)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    // equal products computed in a different order may differ in the last bit
    resolve_ties(&mut modes);
    modes.truncate(n_modes);
    Ok(KlField {
        mean: offset_mean,
        spec: *spec,
        slots: (0..n_modes).collect(),
        modes,
    })
}

fn resolve_ties(modes: &mut [KlMode]) {
    let mut start = 0;
    while start < modes.len() {
        let mut end = start + 1;
        while end < modes.len()
            && (modes[start].eigenvalue - modes[end].eigenvalue).abs() <= 1e-14 * modes[start].eigenvalue
        {
            end += 1;
        }
        modes[start..end].sort_by(|a, b| a.index.cmp(&b.index));
        start = end;
    }
}

/// A field with no random modes, `κ ≡ mean`.
pub fn constant_field(mean: f64) -> KlField {
    KlField {
        mean,
        spec: CovarianceSpec::default(),
        modes: Vec::new(),
        slots: Vec::new(),
    }
}

impl KlField {
    pub fn modes(&self) -> &[KlMode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Stochastic coordinate driving each mode.
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// Move every mode to coordinate `offset + m`.
    pub fn with_slot_offset(mut self, offset: usize) -> Self {
        self.slots = (0..self.modes.len()).map(|m| offset + m).collect();
        self
    }

    /// `κ_{m+1}(x)`, the m-th random mode.
    pub fn mode(&self, m: usize, x1: f64, x2: f64) -> f64 {
        self.modes[m].eval(x1, x2)
    }

    /// `κ(x, y)`.
    pub fn value(&self, x1: f64, x2: f64, y: &[f64]) -> f64 {
        self.mean
            + self
                .modes
                .iter()
                .zip(&self.slots)
                .map(|(m, &s)| m.eval(x1, x2) * y[s])
                .sum::<f64>()
    }

    /// Variance `Σ κ_i(x)²` of the truncated field at `x`.
    pub fn pointwise_variance(&self, x1: f64, x2: f64) -> f64 {
        self.modes.iter().map(|m| m.eval(x1, x2).powi(2)).sum()
    }

    /// `min_y κ(x, y)` over the box `|y_m| ≤ half_width`.
    pub fn min_over_box(&self, x1: f64, x2: f64, half_width: f64) -> f64 {
        self.mean - half_width * self.modes.iter().map(|m| m.eval(x1, x2).abs()).sum::<f64>()
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        match self.slots.iter().max() {
            Some(&s) if s >= y.len() => Err(Error::DimensionMismatch {
                expected: s + 1,
                got: y.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Dump `κ_{m+1}` at every mesh node.
    pub fn write_mode_csv(&self, path: &Path, mesh: &TriMesh, m: usize) -> Result<()> {
        if m >= self.modes.len() {
            return Err(Error::IndexOutOfRange {
                index: m,
                len: self.modes.len(),
            });
        }
        let vals: Vec<f64> = mesh.nodes().iter().map(|p| self.mode(m, p[0], p[1])).collect();
        write_nodal_csv(path, mesh, &vals)
    }
}

/// `x ↦ κ(x, y)` for a fixed parameter point.
pub fn sample_field<'a>(field: &'a KlField, y: &'a [f64]) -> Result<impl Fn(f64, f64) -> f64 + 'a> {
    field.check_point(y)?;
    Ok(move |x1, x2| field.value(x1, x2, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_roots_satisfy_their_equations() {
        let e = eigenpairs_1d(1.0, 0.0, 1.0, 8).unwrap();
        for w in e.windows(2) {
            assert!(w[0].eigenvalue > w[1].eigenvalue);
        }
        for p in &e {
            let lhs = if p.even {
                1.0 - p.omega * (0.5 * p.omega).tan()
            } else {
                p.omega + (0.5 * p.omega).tan()
            };
            assert!(lhs.abs() < 1e-9, "{p:?}");
        }
    }

    #[test]
    fn eigenfunctions_are_normalized() {
        let e = eigenpairs_1d(0.7, 0.0, 1.0, 5).unwrap();
        let n = 20000;
        for p in &e {
            let s: f64 = (0..n)
                .map(|i| p.eval((i as f64 + 0.5) / n as f64).powi(2))
                .sum::<f64>()
                / n as f64;
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mean_only_at_origin() {
        let f = kl_expand(&CovarianceSpec::default(), 7, 1.0).unwrap();
        let y = [0.0; 7];
        let k = sample_field(&f, &y).unwrap();
        assert_eq!(k(0.3, 0.8), 1.0);
        assert!(sample_field(&f, &[0.0; 6]).is_err());
    }

    #[test]
    fn unit_vector_adds_one_mode() {
        let f = kl_expand(&CovarianceSpec::default(), 4, 1.0).unwrap();
        let mut y = [0.0; 4];
        y[2] = 1.0;
        let v = f.value(0.2, 0.9, &y);
        assert!((v - 1.0 - f.mode(2, 0.2, 0.9)).abs() < 1e-15);
    }

    #[test]
    fn ties_broken_by_index() {
        let f = kl_expand(&CovarianceSpec::default(), 8, 1.0).unwrap();
        let idx: Vec<(usize, usize)> = f.modes().iter().map(|m| m.index).collect();
        assert_eq!(idx[0], (0, 0));
        assert_eq!(&idx[1..3], &[(0, 1), (1, 0)]);
        assert_eq!(&idx[6..8], &[(0, 3), (3, 0)]);
    }

    #[test]
    fn truncated_variance_below_total() {
        let spec = CovarianceSpec::default();
        let f = kl_expand(&spec, 7, 1.0).unwrap();
        let total: f64 = f.modes().iter().map(|m| m.eigenvalue).sum();
        assert!(total <= spec.variance);
        assert!(total > 0.8 * spec.variance);
    }
}
