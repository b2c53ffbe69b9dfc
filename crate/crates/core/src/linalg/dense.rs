use crate::error::{Error, Result};

/// LU factorization with partial pivoting of a small dense square matrix.
///
/// Factors are stored row-major in place; used for the node-local blocks of
/// the collective smoother and for coarsest-grid solves.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factor the row-major `n × n` matrix `a`.
    pub fn new(n: usize, mut a: Vec<f64>) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || best <= scale * 1e-300 {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
            }
            let inv = 1.0 / a[k * n + k];
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..k * n + n];
            for row in tail.chunks_exact_mut(n) {
                let f = row[k] * inv;
                if f != 0.0 {
                    row[k] = f;
                    for c in k + 1..n {
                        row[c] -= f * pivot_row[c];
                    }
                } else {
                    row[k] = 0.0;
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrite `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
        }
        for r in 1..n {
            let row = &self.lu[r * n..r * n + r];
            let s: f64 = row.iter().zip(&b[..r]).map(|(l, x)| l * x).sum();
            b[r] -= s;
        }
        for r in (0..n).rev() {
            let row = &self.lu[r * n..(r + 1) * n];
            let s: f64 = row[r + 1..].iter().zip(&b[r + 1..]).map(|(u, x)| u * x).sum();
            b[r] = (b[r] - s) / row[r];
        }
    }
}

/// A [`DenseLu`] whose factors are rounded to `f32` for storage.
///
/// The solve still runs in `f64`, so it applies a fixed linear map close to
/// `A⁻¹`; this halves the memory of large node-block smoothers.
#[derive(Debug, Clone)]
pub struct CompactLu {
    n: usize,
    lu: Vec<f32>,
    piv: Vec<u32>,
}

impl From<DenseLu> for CompactLu {
    fn from(d: DenseLu) -> Self {
        Self {
            n: d.n,
            lu: d.lu.iter().map(|&v| v as f32).collect(),
            piv: d.piv.iter().map(|&p| p as u32).collect(),
        }
    }
}

impl CompactLu {
    pub fn dim(&self) -> usize {
        self.n
    }
}

/// In-place solve with a factored local block.
pub trait LocalSolve {
    fn solve_in_place(&self, b: &mut [f64]);
}

impl LocalSolve for DenseLu {
    fn solve_in_place(&self, b: &mut [f64]) {
        DenseLu::solve_in_place(self, b)
    }
}

impl LocalSolve for CompactLu {
    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k] as usize;
            if p != k {
                b.swap(k, p);
            }
        }
        for r in 1..n {
            let row = &self.lu[r * n..r * n + r];
            let s: f64 = row.iter().zip(&b[..r]).map(|(&l, x)| l as f64 * x).sum();
            b[r] -= s;
        }
        for r in (0..n).rev() {
            let row = &self.lu[r * n..(r + 1) * n];
            let s: f64 = row[r + 1..].iter().zip(&b[r + 1..]).map(|(&u, x)| u as f64 * x).sum();
            b[r] = (b[r] - s) / row[r] as f64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_permuted_system() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::new(3, a.clone()).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3)
            .map(|r| (0..3).map(|c| a[r * 3 + c] * x[c]).sum())
            .collect();
        lu.solve_in_place(&mut b);
        for (bi, xi) in b.iter().zip(x) {
            assert!((bi - xi).abs() < 1e-14);
        }
    }

    #[test]
    fn compact_factors_are_close() {
        let a = vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.3, 0.1, 2.0];
        let lu = DenseLu::new(3, a.clone()).unwrap();
        let c = CompactLu::from(lu.clone());
        let mut x = vec![1.0, 2.0, 3.0];
        let mut y = x.clone();
        lu.solve_in_place(&mut x);
        LocalSolve::solve_in_place(&c, &mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn singular_is_reported() {
        assert!(matches!(
            DenseLu::new(2, vec![1.0, 2.0, 2.0, 4.0]),
            Err(Error::Singular(1))
        ));
    }
}
