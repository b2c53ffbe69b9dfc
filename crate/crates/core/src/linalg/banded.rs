use super::SparseMat;
use crate::error::{Error, Result};

/// Banded LU factorization with partial pivoting.
///
/// Storage follows the LAPACK `gbtrf` layout: column `j` holds rows
/// `j - ku - kl ..= j + kl` at offsets `kl + ku + i - j`, leaving room for the
/// `kl` extra superdiagonals created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    piv: Vec<usize>,
}

impl BandedLu {
    /// Factor a square sparse matrix, taking its bandwidth from the stored pattern.
    pub fn factor(a: &SparseMat) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols());
        let n = a.nrows();
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, c, _) in a.iter() {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        for (r, c, v) in a.iter() {
            ab[c * ldab + kv + r - c] = v;
        }
        let mut piv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for t in 1..=km {
                let v = ab[col + t].abs();
                if v > best {
                    best = v;
                    jp = t;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Singular(j));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    ab.swap(base + j - c, base + j + jp - c);
                }
            }
            let inv = 1.0 / ab[col];
            for t in 1..=km {
                ab[col + t] *= inv;
            }
            for c in j + 1..=ju {
                let base = c * ldab + kv;
                let f = ab[base + j - c];
                if f != 0.0 {
                    for t in 1..=km {
                        let l = ab[col + t];
                        ab[base + j + t - c] -= l * f;
                    }
                }
            }
        }
        Ok(Self {
            n,
            kl,
            ku,
            ldab,
            ab,
            piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Overwrite `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * self.ldab + kv;
                for t in 1..=km {
                    b[j + t] -= self.ab[col + t] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * self.ldab + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for r in lo..j {
                    b[r] -= self.ab[col + r - j] * bj;
                }
            }
        }
    }
}
