//! Generalized polynomial chaos: orthonormal multivariate bases over the
//! stochastic coordinates, the Galerkin coupling matrices they induce, and
//! sparse-grid cubature for the collocation path.

mod poly;
mod quadrature;
mod sparse_grid;

use std::collections::HashMap;

pub use poly::{Family, SQRT3};
pub use quadrature::{gauss_rule, Rule1d};
pub use sparse_grid::{build_sparse_grid, cubature, points_1d, GridComponent, SparseGrid};

use crate::error::{Error, Result};
use crate::linalg::{SparseMat, TripletBuilder};

/// Largest basis `build_basis` accepts unless a limit is passed explicitly.
pub const DEFAULT_MAX_BASIS: usize = 200_000;

/// Polynomial degree per stochastic coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Enumerate multi-indices of length `dim` with total degree ≤ `p`, grouped
/// by degree; within a degree the first coordinate varies slowest and larger
/// entries come first, so `(1,0,…)` precedes `(0,1,…)`.
pub(crate) fn graded_indices(dim: usize, p: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, dim: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(prefix, dim, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=p {
        fill(&mut Vec::with_capacity(dim), dim, d, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Total-degree gPC basis `{ψ_q : |q| ≤ p}` with a fixed position per index.
///
/// Position 0 is always the constant polynomial, so the first Galerkin block
/// of any expansion holds the mean.
#[derive(Debug, Clone)]
pub struct GpcBasis {
    families: Vec<Family>,
    total_degree: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<Vec<usize>, usize>,
}

/// Build the basis over `families.len()` coordinates with total degree `p`.
pub fn build_basis(families: &[Family], p: usize) -> Result<GpcBasis> {
    build_basis_with_limit(families, p, DEFAULT_MAX_BASIS)
}

pub fn build_basis_with_limit(families: &[Family], p: usize, max_q: usize) -> Result<GpcBasis> {
    let dim = families.len();
    if dim == 0 {
        return Err(Error::InvalidArgument("basis needs at least one dimension".into()));
    }
    let q = binomial(dim + p, p).unwrap_or(usize::MAX);
    if q > max_q {
        return Err(Error::Capacity {
            requested: q,
            max: max_q,
        });
    }
    let raw = graded_indices(dim, p);
    debug_assert_eq!(raw.len(), q);
    let lookup = raw.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    Ok(GpcBasis {
        families: families.to_vec(),
        total_degree: p,
        indices: raw.into_iter().map(MultiIndex).collect(),
        lookup,
    })
}

/// Stochastic factor `ζ` multiplying one deterministic coefficient mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zeta {
    /// `ζ ≡ 1`
    One,
    /// `ζ(y) = y_m` (zero-based coordinate)
    Coord(usize),
}

impl GpcBasis {
    pub fn dim(&self) -> usize {
        self.families.len()
    }

    pub fn total_degree(&self) -> usize {
        self.total_degree
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Number of basis polynomials `Q`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn multi_index(&self, j: usize) -> Result<&MultiIndex> {
        self.indices.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.len(),
        })
    }

    /// Position of a multi-index, if it belongs to the basis.
    pub fn position(&self, q: &[usize]) -> Option<usize> {
        self.lookup.get(q).copied()
    }

    /// `ψ_j(y)`
    pub fn eval_poly(&self, j: usize, y: &[f64]) -> Result<f64> {
        let q = self.multi_index(j)?;
        self.check_point(y)?;
        Ok(q.0
            .iter()
            .zip(&self.families)
            .zip(y)
            .map(|((&d, fam), &yi)| fam.eval(d, yi))
            .product())
    }

    /// All `ψ_j(y)`, j = 0..Q.
    pub fn eval_all(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let p = self.total_degree;
        let tables: Vec<Vec<f64>> = self
            .families
            .iter()
            .zip(y)
            .map(|(fam, &yi)| fam.eval_all(p, yi))
            .collect();
        Ok(self
            .indices
            .iter()
            .map(|q| q.0.iter().enumerate().map(|(d, &k)| tables[d][k]).product())
            .collect())
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: y.len(),
            });
        }
        for (fam, &yi) in self.families.iter().zip(y) {
            if !fam.contains(yi) {
                return Err(Error::InvalidArgument(format!(
                    "point coordinate {yi} outside the support of {fam:?}"
                )));
            }
        }
        Ok(())
    }

    /// `C(j,k) = ∫ ζ ψ_j ψ_k ρ dy`, exact from the three-term recurrence.
    pub fn coupling_matrix(&self, zeta: Zeta) -> Result<SparseMat> {
        let q = self.len();
        match zeta {
            Zeta::One => Ok(SparseMat::identity(q)),
            Zeta::Coord(m) => {
                if m >= self.dim() {
                    return Err(Error::Unsupported(format!(
                        "ζ = y_{m} but the basis has {} coordinates",
                        self.dim()
                    )));
                }
                let fam = self.families[m];
                let mut t = TripletBuilder::new(q, q);
                for (j, idx) in self.indices.iter().enumerate() {
                    let mut up = idx.0.clone();
                    up[m] += 1;
                    if let Some(k) = self.position(&up) {
                        let b = fam.recurrence(up[m]);
                        t.push(j, k, b);
                        t.push(k, j, b);
                    }
                }
                Ok(t.build())
            }
        }
    }

    /// `E(j,k) = ∫ ∇ψ_j · ∇ψ_k ρ dy` from the per-family closed forms.
    ///
    /// Entries vanish unless the two multi-indices differ in at most one slot.
    pub fn gradient_matrix(&self) -> SparseMat {
        let q = self.len();
        let mut t = TripletBuilder::new(q, q);
        for (j, a) in self.indices.iter().enumerate() {
            for (k, b) in self.indices.iter().enumerate().skip(j) {
                let mut diff = None;
                let mut n_diff = 0;
                for (s, (&x, &y)) in a.0.iter().zip(&b.0).enumerate() {
                    if x != y {
                        n_diff += 1;
                        diff = Some(s);
                        if n_diff > 1 {
                            break;
                        }
                    }
                }
                let v = match (n_diff, diff) {
                    (0, _) => a
                        .0
                        .iter()
                        .zip(&self.families)
                        .map(|(&d, fam)| fam.derivative_inner(d, d))
                        .sum(),
                    (1, Some(s)) => self.families[s].derivative_inner(a.0[s], b.0[s]),
                    _ => 0.0,
                };
                if v != 0.0 {
                    t.push(j, k, v);
                    if j != k {
                        t.push(k, j, v);
                    }
                }
            }
        }
        t.build()
    }
}
