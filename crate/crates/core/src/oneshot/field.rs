//! Galerkin coefficient fields, their moments and control targets.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{l2_project, FeSpace};
use crate::linalg::SparseMat;

/// Coefficients `z_{i,q}` of `Σ_i Σ_q z_{i,q} φ_i ψ_q`, stored block by
/// block; block 0 belongs to the constant polynomial and holds the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticField {
    n: usize,
    q: usize,
    data: Vec<f64>,
}

impl StochasticField {
    pub fn zeros(n: usize, q: usize) -> Self {
        Self {
            n,
            q,
            data: vec![0.0; n * q],
        }
    }

    pub fn from_vec(n: usize, q: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * q {
            return Err(Error::DimensionMismatch {
                expected: n * q,
                got: data.len(),
            });
        }
        Ok(Self { n, q, data })
    }

    /// A field with a single (mean) block.
    pub fn deterministic(mean: Vec<f64>) -> Self {
        Self {
            n: mean.len(),
            q: 1,
            data: mean,
        }
    }

    /// Spatial size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of polynomial blocks.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn block(&self, q: usize) -> &[f64] {
        &self.data[q * self.n..(q + 1) * self.n]
    }

    pub fn block_mut(&mut self, q: usize) -> &mut [f64] {
        &mut self.data[q * self.n..(q + 1) * self.n]
    }

    pub fn mean(&self) -> &[f64] {
        self.block(0)
    }

    /// The same field with `q` blocks, padding with zeros or truncating.
    pub fn resized(&self, q: usize) -> Self {
        let mut out = Self::zeros(self.n, q);
        let k = self.q.min(q) * self.n;
        out.data[..k].copy_from_slice(&self.data[..k]);
        out
    }

    /// Blockwise sum; the result has the larger block count.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = self.resized(self.q.max(other.q));
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += v;
        }
        Ok(out)
    }

    /// `Σ_q v_qᵀ A v_q`
    pub fn norm_sq(&self, a: &SparseMat) -> f64 {
        (0..self.q).map(|q| a.quad_form(self.block(q), self.block(q))).sum()
    }

    /// `Σ_{q≥1} v_qᵀ A v_q`, the squared norm of the fluctuation.
    pub fn fluctuation_norm_sq(&self, a: &SparseMat) -> f64 {
        (1..self.q).map(|q| a.quad_form(self.block(q), self.block(q))).sum()
    }
}

/// Nodal mean and variance; the variance is `Σ_{q≥1} z_q²` by orthonormality.
pub fn moments(field: &StochasticField) -> (Vec<f64>, Vec<f64>) {
    let mean = field.mean().to_vec();
    let mut var = vec![0.0; field.n];
    for q in 1..field.q {
        for (v, z) in var.iter_mut().zip(field.block(q)) {
            *v += z * z;
        }
    }
    (mean, var)
}

/// Spatial function on the unit square.
pub type SpatialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The state the cost functional tracks.
#[derive(Clone)]
pub enum TargetSpec {
    /// Deterministic `ẑ(x)`, projected onto the mean block.
    Deterministic(SpatialFn),
    /// Random `ẑ(x, y)` given by its Galerkin coefficients.
    Stochastic(StochasticField),
}

impl fmt::Debug for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Deterministic(_) => f.write_str("TargetSpec::Deterministic(..)"),
            TargetSpec::Stochastic(s) => f.debug_tuple("TargetSpec::Stochastic").field(&(s.n(), s.q())).finish(),
        }
    }
}

impl TargetSpec {
    /// Coefficients with `q` blocks on `space`.
    pub fn coefficients(&self, space: &FeSpace, mass: &SparseMat, q: usize) -> Result<StochasticField> {
        match self {
            TargetSpec::Deterministic(f) => {
                let mut out = StochasticField::zeros(space.ndofs(), q);
                out.block_mut(0).copy_from_slice(&l2_project(space, mass, f.as_ref()));
                Ok(out)
            }
            TargetSpec::Stochastic(s) => {
                if s.n() != space.ndofs() {
                    return Err(Error::DimensionMismatch {
                        expected: space.ndofs(),
                        got: s.n(),
                    });
                }
                Ok(s.resized(q))
            }
        }
    }

    /// The piecewise target with plateaus 1 (bottom), 0 (middle strip) and
    /// 2 (top), joined to zero at `x1 ∈ {0, 1}` by linear ramps.
    pub fn piecewise() -> Self {
        TargetSpec::Deterministic(Arc::new(piecewise_target))
    }
}

/// Piecewise target on the unit square.
pub fn piecewise_target(x1: f64, x2: f64) -> f64 {
    if x2 > 0.4 && x2 < 0.6 {
        0.0
    } else if x1 > 0.1 && x1 < 0.9 && x2 <= 0.4 {
        1.0
    } else if x1 > 0.2 && x1 < 0.8 && x2 >= 0.6 {
        2.0
    } else if (x1 < 0.1 && x2 <= 0.4) || (x1 < 0.2 && x2 >= 0.6) {
        10.0 * x1
    } else {
        10.0 - 10.0 * x1
    }
}
