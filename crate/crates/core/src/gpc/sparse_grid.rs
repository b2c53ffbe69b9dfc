//! Smolyak sparse grids by the combination technique over non-nested
//! Gauss–Legendre rules on `[-√3, √3]`.
//!
//! The 1D rule at level `ℓ` has `m(ℓ) = 2^(ℓ+1) − 1` points (1, 3, 7, 15, …).
//! The grid is the signed sum of tensor rules over level vectors `ℓ` with
//! `max(0, level − L + 1) ≤ |ℓ| ≤ level`, each carrying the coefficient
//! `(−1)^(level−|ℓ|) · C(L−1, level−|ℓ|)`.

use std::collections::HashMap;

use super::graded_indices;
use super::poly::Family;
use super::quadrature::{gauss_rule, Rule1d};
use crate::error::{Error, Result};

/// Number of 1D points at level `l`.
pub fn rule_size(l: usize) -> usize {
    (1usize << (l + 1)) - 1
}

/// 1D Gauss–Legendre rule used at level `l`.
pub fn points_1d(l: usize) -> Rule1d {
    gauss_rule(Family::Legendre, rule_size(l))
}

/// One tensor-product term of the combination technique.
#[derive(Debug, Clone, PartialEq)]
pub struct GridComponent {
    /// 1D level per coordinate.
    pub levels: Vec<usize>,
    /// Integer combination coefficient.
    pub coeff: f64,
    /// Merged-grid index of every tensor point, first coordinate slowest.
    pub point_ids: Vec<usize>,
}

/// Merged sparse grid with folded cubature weights.
#[derive(Debug, Clone)]
pub struct SparseGrid {
    dim: usize,
    level: usize,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    components: Vec<GridComponent>,
    rules: Vec<Rule1d>,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn key(x: &[f64]) -> Vec<i64> {
    x.iter().map(|v| (v * 1e12).round() as i64).collect()
}

/// Build the level-`level` grid in `dim` dimensions.
pub fn build_sparse_grid(dim: usize, level: usize) -> Result<SparseGrid> {
    if dim == 0 {
        return Err(Error::InvalidArgument("sparse grid needs at least one dimension".into()));
    }
    let rules: Vec<Rule1d> = (0..=level).map(points_1d).collect();
    let lowest = (level + 1).saturating_sub(dim);
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut lookup: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut components = Vec::new();
    for levels in graded_indices(dim, level) {
        let total: usize = levels.iter().sum();
        if total < lowest {
            continue;
        }
        let k = level - total;
        let coeff = if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(dim - 1, k);
        if coeff == 0.0 {
            continue;
        }
        let sizes: Vec<usize> = levels.iter().map(|&l| rules[l].nodes.len()).collect();
        let count: usize = sizes.iter().product();
        let mut point_ids = Vec::with_capacity(count);
        let mut digit = vec![0usize; dim];
        for _ in 0..count {
            let mut y = Vec::with_capacity(dim);
            let mut w = coeff;
            for d in 0..dim {
                let r = &rules[levels[d]];
                y.push(r.nodes[digit[d]]);
                w *= r.weights[digit[d]];
            }
            let id = *lookup.entry(key(&y)).or_insert_with(|| {
                points.push(y);
                weights.push(0.0);
                points.len() - 1
            });
            weights[id] += w;
            point_ids.push(id);
            for d in (0..dim).rev() {
                digit[d] += 1;
                if digit[d] < sizes[d] {
                    break;
                }
                digit[d] = 0;
            }
        }
        components.push(GridComponent {
            levels,
            coeff,
            point_ids,
        });
    }
    Ok(SparseGrid {
        dim,
        level,
        points,
        weights,
        components,
        rules,
    })
}

/// `Σ w_i s_i`
pub fn cubature(grid: &SparseGrid, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    Ok(grid.weights.iter().zip(samples).map(|(w, s)| w * s).sum())
}

fn lagrange_1d(nodes: &[f64], y: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (y - xj) / (nodes[i] - xj))
                .product()
        })
        .collect()
}

impl SparseGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Point count after merging.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GridComponent] {
        &self.components
    }

    /// Coefficients `c_i(y)` of the combination-technique interpolant
    /// `Σ_i c_i(y) s_i` built from per-component tensor Lagrange interpolants.
    pub fn interpolation_weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: y.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&v| !Family::Legendre.contains(v)) {
            return Err(Error::InvalidArgument(format!("coordinate {bad} outside [-√3, √3]")));
        }
        let tables: Vec<Vec<Vec<f64>>> = (0..self.dim)
            .map(|d| self.rules.iter().map(|r| lagrange_1d(&r.nodes, y[d])).collect())
            .collect();
        let mut out = vec![0.0; self.len()];
        for comp in &self.components {
            let sizes: Vec<usize> = comp.levels.iter().map(|&l| self.rules[l].nodes.len()).collect();
            let mut digit = vec![0usize; self.dim];
            for &id in &comp.point_ids {
                let mut v = comp.coeff;
                for d in 0..self.dim {
                    v *= tables[d][comp.levels[d]][digit[d]];
                }
                out[id] += v;
                for d in (0..self.dim).rev() {
                    digit[d] += 1;
                    if digit[d] < sizes[d] {
                        break;
                    }
                    digit[d] = 0;
                }
            }
        }
        Ok(out)
    }

    /// Evaluate the sparse interpolant of scalar samples at `y`.
    pub fn interpolate(&self, samples: &[f64], y: &[f64]) -> Result<f64> {
        if samples.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: samples.len(),
            });
        }
        let c = self.interpolation_weights(y)?;
        Ok(c.iter().zip(samples).map(|(a, b)| a * b).sum())
    }
}
