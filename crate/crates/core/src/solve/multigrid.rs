//! Geometric multigrid with collective smoothing for Kronecker-structured
//! systems on the nested uniform mesh hierarchy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{prolongation, FeSpace};
use crate::linalg::{CompactLu, DenseLu, LinearOperator, SparseMat};
use crate::oneshot::{to_block_major, to_node_major, KronOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MgConfig {
    /// Number of levels including the finest; `None` coarsens down to
    /// `n = 4` (or as far as the mesh allows).
    pub levels: Option<usize>,
    pub pre_smooth: usize,
    pub post_smooth: usize,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            levels: None,
            pre_smooth: 2,
            post_smooth: 2,
        }
    }
}

impl MgConfig {
    /// Resolve the level count for a finest mesh of `n` cells per side.
    pub fn level_count(&self, n: usize) -> Result<usize> {
        let max = {
            let mut l = 1;
            let mut m = n;
            while m % 2 == 0 && m / 2 >= 2 {
                m /= 2;
                l += 1;
            }
            l
        };
        match self.levels {
            None => {
                let mut l = 1;
                let mut m = n;
                while m > 4 && m % 2 == 0 {
                    m /= 2;
                    l += 1;
                }
                Ok(l)
            }
            Some(0) => Err(Error::InvalidArgument("multigrid needs at least one level".into())),
            Some(l) if l > max => Err(Error::InvalidArgument(format!(
                "mesh n={n} supports at most {max} nested levels, {l} requested"
            ))),
            Some(l) => Ok(l),
        }
    }
}

/// Node-block factors, rounded to `f32` above [`COMPACT_THRESHOLD`] bytes.
enum NodeFactors {
    Full(Vec<DenseLu>),
    Compact(Vec<CompactLu>),
}

/// Size of `f64` node factors on one level above which they are stored
/// in single precision.
pub const COMPACT_THRESHOLD: usize = 256 << 20;

struct Level {
    op: KronOperator,
    lus: NodeFactors,
    /// Prolongation from the next coarser level and its transpose.
    transfer: Option<(SparseMat, SparseMat)>,
}

/// Operators on a nested mesh hierarchy, finest first, with a dense
/// factorization on the coarsest level.
pub struct MgHierarchy {
    levels: Vec<Level>,
    coarse: DenseLu,
    cfg: MgConfig,
}

impl std::fmt::Debug for MgHierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MgHierarchy")
            .field("levels", &self.levels.iter().map(|l| l.op.n()).collect::<Vec<_>>())
            .field("blocks", &self.blocks())
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl Level {
    fn smooth(&self, x: &mut [f64], f: &[f64], reverse: bool) {
        match &self.lus {
            NodeFactors::Full(l) => self.op.gauss_seidel_sweep(l, x, f, reverse),
            NodeFactors::Compact(l) => self.op.gauss_seidel_sweep(l, x, f, reverse),
        }
    }
}

/// `y = (A ⊗ I_B) x` on node-major vectors.
fn kron_identity(a: &SparseMat, x: &[f64], blocks: usize) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows() * blocks];
    for r in 0..a.nrows() {
        let (cols, vals) = a.row(r);
        let yr = &mut y[r * blocks..(r + 1) * blocks];
        for (&c, &v) in cols.iter().zip(vals) {
            for (yi, xi) in yr.iter_mut().zip(&x[c * blocks..(c + 1) * blocks]) {
                *yi += v * xi;
            }
        }
    }
    y
}

impl MgHierarchy {
    /// Build the hierarchy by re-assembling the operator on every level.
    ///
    /// `build` maps a finite element space to its operator; all levels must
    /// share the same block count.
    pub fn build(
        fine: &FeSpace,
        cfg: MgConfig,
        build: &dyn Fn(&FeSpace) -> Result<KronOperator>,
    ) -> Result<Self> {
        let count = cfg.level_count(fine.mesh().n())?;
        let mut spaces = vec![fine.clone()];
        for _ in 1..count {
            let n = spaces.last().expect("nonempty").mesh().n();
            spaces.push(FeSpace::unit_square(n / 2)?);
        }
        let mut levels = Vec::with_capacity(count);
        let mut blocks = None;
        for (l, space) in spaces.iter().enumerate() {
            let op = build(space)?;
            if op.n() != space.ndofs() {
                return Err(Error::DimensionMismatch {
                    expected: space.ndofs(),
                    got: op.n(),
                });
            }
            match blocks {
                None => blocks = Some(op.blocks()),
                Some(b) if b != op.blocks() => {
                    return Err(Error::DimensionMismatch {
                        expected: b,
                        got: op.blocks(),
                    })
                }
                _ => {}
            }
            let last = l + 1 == spaces.len();
            let lus = if last {
                NodeFactors::Full(Vec::new())
            } else if op.n() * op.blocks() * op.blocks() * 8 > COMPACT_THRESHOLD {
                let mut v = Vec::with_capacity(op.n());
                for node in 0..op.n() {
                    v.push(CompactLu::from(DenseLu::new(op.blocks(), op.node_block(node))?));
                }
                NodeFactors::Compact(v)
            } else {
                NodeFactors::Full(op.factor_node_blocks()?)
            };
            let transfer = if last {
                None
            } else {
                let p = prolongation(&spaces[l + 1], space)?;
                let r = p.transpose();
                Some((p, r))
            };
            levels.push(Level { op, lus, transfer });
        }
        let coarsest = &levels.last().expect("at least one level").op;
        let a = coarsest.to_sparse();
        let perm_dense = {
            // node-major ordering of the coarsest operator
            let (n, b) = (coarsest.n(), coarsest.blocks());
            let dim = n * b;
            let mut d = vec![0.0; dim * dim];
            for (r, c, v) in a.iter() {
                let (rn, rb) = (r % n, r / n);
                let (cn, cb) = (c % n, c / n);
                d[(rn * b + rb) * dim + cn * b + cb] = v;
            }
            d
        };
        let coarse = DenseLu::new(coarsest.n() * coarsest.blocks(), perm_dense)?;
        log::debug!(
            "multigrid hierarchy: {} levels, coarsest N={}",
            levels.len(),
            coarsest.n()
        );
        Ok(Self { levels, coarse, cfg })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn blocks(&self) -> usize {
        self.levels[0].op.blocks()
    }

    /// Finest-level operator.
    pub fn operator(&self) -> &KronOperator {
        &self.levels[0].op
    }

    /// One V-cycle on node-major vectors, updating `x` in place.
    pub fn v_cycle(&self, x: &mut [f64], f: &[f64]) {
        self.cycle(0, x, f);
    }

    fn cycle(&self, l: usize, x: &mut [f64], f: &[f64]) {
        let level = &self.levels[l];
        let Some((p, r)) = &level.transfer else {
            x.copy_from_slice(f);
            self.coarse.solve_in_place(x);
            return;
        };
        let op = &level.op;
        let b = op.blocks();
        for _ in 0..self.cfg.pre_smooth {
            level.smooth(x, f, false);
        }
        let mut res = vec![0.0; x.len()];
        op.apply_node_major(x, &mut res);
        for (ri, fi) in res.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        let fc = kron_identity(r, &res, b);
        let mut xc = vec![0.0; fc.len()];
        self.cycle(l + 1, &mut xc, &fc);
        let corr = kron_identity(p, &xc, b);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        for _ in 0..self.cfg.post_smooth {
            level.smooth(x, f, true);
        }
    }

    /// Stationary iteration of V-cycles on a block-major system; returns the
    /// iterate and the residual history `‖f − A x_k‖`.
    pub fn solve_stationary(&self, rhs: &[f64], cycles: usize) -> (Vec<f64>, Vec<f64>) {
        let op = self.operator();
        let (n, b) = (op.n(), op.blocks());
        let f = to_node_major(rhs, n, b);
        let mut x = vec![0.0; f.len()];
        let mut r = vec![0.0; f.len()];
        let mut hist = Vec::with_capacity(cycles + 1);
        let resid = |x: &[f64], r: &mut [f64]| {
            op.apply_node_major(x, r);
            r.iter().zip(&f).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
        };
        hist.push(resid(&x, &mut r));
        for _ in 0..cycles {
            self.v_cycle(&mut x, &f);
            hist.push(resid(&x, &mut r));
        }
        (to_block_major(&x, n, b), hist)
    }
}

/// One V-cycle from a zero initial guess, as a preconditioner on
/// block-major vectors.
impl LinearOperator for MgHierarchy {
    fn dim(&self) -> usize {
        let op = self.operator();
        op.n() * op.blocks()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let op = self.operator();
        let (n, b) = (op.n(), op.blocks());
        let f = to_node_major(x, n, b);
        let mut v = vec![0.0; f.len()];
        self.v_cycle(&mut v, &f);
        y.copy_from_slice(&to_block_major(&v, n, b));
    }
}
