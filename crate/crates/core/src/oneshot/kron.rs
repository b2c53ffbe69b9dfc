//! Matrix-free operators of the form `Σ_t B_t ⊗ A_t`.
//!
//! `B_t` is a small stochastic/block matrix and `A_t` a spatial sparse
//! matrix of size `N`. Vectors are stored block-major: block `b` occupies
//! `x[b N .. (b+1) N]`. The node-major layout `x[n B + b]` used by the
//! collective smoother is available through the permutation helpers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{DenseLu, LinearOperator, LocalSolve, SparseMat};

/// One Kronecker term `stoch ⊗ space`.
#[derive(Debug, Clone)]
pub struct KronTerm {
    pub stoch: SparseMat,
    pub space: Arc<SparseMat>,
}

/// Sum of Kronecker terms acting on `blocks` blocks of length `n`.
#[derive(Debug, Clone)]
pub struct KronOperator {
    n: usize,
    blocks: usize,
    terms: Vec<KronTerm>,
}

impl KronOperator {
    pub fn new(n: usize, blocks: usize) -> Self {
        Self {
            n,
            blocks,
            terms: Vec::new(),
        }
    }

    /// Append `stoch ⊗ space`; all-zero stochastic factors are skipped.
    pub fn push(&mut self, stoch: SparseMat, space: Arc<SparseMat>) -> Result<()> {
        if stoch.nrows() != self.blocks || stoch.ncols() != self.blocks {
            return Err(Error::DimensionMismatch {
                expected: self.blocks,
                got: stoch.nrows(),
            });
        }
        if space.nrows() != self.n || space.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: space.nrows(),
            });
        }
        if stoch.nnz() > 0 {
            self.terms.push(KronTerm { stoch, space });
        }
        Ok(())
    }

    /// Spatial size `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks (`2Q`, `3Q`, or `2` for a single deterministic pair).
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    /// `y = Σ_t (B_t ⊗ A_t) x` in block-major order.
    pub fn apply_block_major(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        assert_eq!(x.len(), n * self.blocks);
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut ax = vec![0.0; n * self.blocks];
        let mut done = vec![false; self.blocks];
        for t in &self.terms {
            done.iter_mut().for_each(|d| *d = false);
            for (_, c, _) in t.stoch.iter() {
                if !done[c] {
                    t.space.mul_vec(&x[c * n..(c + 1) * n], &mut ax[c * n..(c + 1) * n]);
                    done[c] = true;
                }
            }
            for (b, c, v) in t.stoch.iter() {
                let src = &ax[c * n..(c + 1) * n];
                for (yi, s) in y[b * n..(b + 1) * n].iter_mut().zip(src) {
                    *yi += v * s;
                }
            }
        }
    }

    /// `y = Σ_t (B_t ⊗ A_t) x` with both vectors in node-major order.
    pub fn apply_node_major(&self, x: &[f64], y: &mut [f64]) {
        let nb = self.blocks;
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut bx = vec![0.0; nb];
        for t in &self.terms {
            for node in 0..self.n {
                let (cols, vals) = t.space.row(node);
                let yn = &mut y[node * nb..(node + 1) * nb];
                for (&m, &a) in cols.iter().zip(vals) {
                    let xm = &x[m * nb..(m + 1) * nb];
                    bx.iter_mut().for_each(|v| *v = 0.0);
                    for (b, c, v) in t.stoch.iter() {
                        bx[b] += v * xm[c];
                    }
                    for (yi, s) in yn.iter_mut().zip(&bx) {
                        *yi += a * s;
                    }
                }
            }
        }
    }

    /// Node-local block `D_n = Σ_t A_t(n,n) B_t`, row-major.
    pub fn node_block(&self, node: usize) -> Vec<f64> {
        let nb = self.blocks;
        let mut d = vec![0.0; nb * nb];
        for t in &self.terms {
            let a = t.space.get(node, node);
            if a != 0.0 {
                for (b, c, v) in t.stoch.iter() {
                    d[b * nb + c] += a * v;
                }
            }
        }
        d
    }

    /// Factor every node-local block.
    pub fn factor_node_blocks(&self) -> Result<Vec<DenseLu>> {
        (0..self.n)
            .map(|node| DenseLu::new(self.blocks, self.node_block(node)))
            .collect()
    }

    /// One collective Gauss–Seidel sweep over nodes on node-major vectors.
    ///
    /// Every node updates all of its block unknowns at once by solving the
    /// node-local system with off-node couplings moved to the right-hand side.
    pub fn gauss_seidel_sweep<S: LocalSolve>(&self, lus: &[S], x: &mut [f64], f: &[f64], reverse: bool) {
        let nb = self.blocks;
        let mut s = vec![0.0; nb];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..self.n).rev())
        } else {
            Box::new(0..self.n)
        };
        for node in order {
            s.copy_from_slice(&f[node * nb..(node + 1) * nb]);
            for t in &self.terms {
                let (cols, vals) = t.space.row(node);
                for (&m, &a) in cols.iter().zip(vals) {
                    if m == node {
                        continue;
                    }
                    let xm = &x[m * nb..(m + 1) * nb];
                    for (b, c, v) in t.stoch.iter() {
                        s[b] -= a * v * xm[c];
                    }
                }
            }
            lus[node].solve_in_place(&mut s);
            x[node * nb..(node + 1) * nb].copy_from_slice(&s);
        }
    }

    /// Explicit sparse matrix in block-major order, for tests and small
    /// direct solves.
    pub fn to_sparse(&self) -> SparseMat {
        let n = self.n;
        let dim = n * self.blocks;
        let mut t = crate::linalg::TripletBuilder::new(dim, dim);
        for term in &self.terms {
            for (b, c, v) in term.stoch.iter() {
                for (r, s, a) in term.space.iter() {
                    t.push(b * n + r, c * n + s, v * a);
                }
            }
        }
        t.build()
    }
}

impl LinearOperator for KronOperator {
    fn dim(&self) -> usize {
        self.n * self.blocks
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_block_major(x, y);
    }
}

/// Block-major to node-major.
pub fn to_node_major(x: &[f64], n: usize, blocks: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for b in 0..blocks {
        for i in 0..n {
            out[i * blocks + b] = x[b * n + i];
        }
    }
    out
}

/// Node-major to block-major.
pub fn to_block_major(x: &[f64], n: usize, blocks: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for b in 0..blocks {
        for i in 0..n {
            out[b * n + i] = x[i * blocks + b];
        }
    }
    out
}
