//! One-dimensional orthonormal polynomial families.
//!
//! Both families satisfy the symmetric three-term recurrence
//! `y φ_n = b_{n+1} φ_{n+1} + b_n φ_{n-1}` with `φ_0 = 1`.

use serde::{Deserialize, Serialize};

/// Distribution of one stochastic coordinate and its orthonormal polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Uniform on `[-√3, √3]` (zero mean, unit variance), normalized Legendre.
    Legendre,
    /// Standard normal, normalized probabilists' Hermite.
    Hermite,
}

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

impl Family {
    /// Recurrence coefficient `b_n` linking degrees `n - 1` and `n` (n ≥ 1).
    pub fn recurrence(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Family::Legendre => SQRT3 * nf / ((2.0 * nf - 1.0) * (2.0 * nf + 1.0)).sqrt(),
            Family::Hermite => nf.sqrt(),
        }
    }

    /// Half-width of the support, `None` when unbounded.
    pub fn support(self) -> Option<f64> {
        match self {
            Family::Legendre => Some(SQRT3),
            Family::Hermite => None,
        }
    }

    pub fn contains(self, y: f64) -> bool {
        match self.support() {
            Some(h) => y.abs() <= h * (1.0 + 1e-12),
            None => y.is_finite(),
        }
    }

    /// Values `φ_0(y), …, φ_deg(y)`.
    pub fn eval_all(self, deg: usize, y: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(deg + 1);
        v.push(1.0);
        if deg == 0 {
            return v;
        }
        v.push(y / self.recurrence(1));
        for n in 1..deg {
            let next = (y * v[n] - self.recurrence(n) * v[n - 1]) / self.recurrence(n + 1);
            v.push(next);
        }
        v
    }

    pub fn eval(self, deg: usize, y: f64) -> f64 {
        self.eval_all(deg, y)[deg]
    }

    /// Values and first derivatives of `φ_0 … φ_deg` at `y`.
    pub fn eval_with_derivative(self, deg: usize, y: f64) -> (Vec<f64>, Vec<f64>) {
        let v = self.eval_all(deg, y);
        let mut d = vec![0.0; deg + 1];
        if deg >= 1 {
            d[1] = 1.0 / self.recurrence(1);
        }
        for n in 1..deg {
            d[n + 1] = (v[n] + y * d[n] - self.recurrence(n) * d[n - 1]) / self.recurrence(n + 1);
        }
        (v, d)
    }

    /// `∫ φ_i' φ_j' ρ dy` from the closed forms.
    ///
    /// Hermite: `φ_n' = √n φ_{n-1}`, hence `i δ_ij`. Legendre: the parity-gated
    /// product `√(2i+1)√(2j+1)/3 · c(min(i,j))` with
    /// `c(m) = ⌊(m+1)/2⌋ (1 - 2⌊(1-m)/2⌋)` (floors toward −∞), which equals
    /// `m(m+1)/2`. The Legendre value is returned rounded to nearest.
    pub fn derivative_inner(self, i: usize, j: usize) -> f64 {
        match self {
            Family::Hermite => {
                if i == j {
                    i as f64
                } else {
                    0.0
                }
            }
            Family::Legendre => {
                if (i + j) % 2 == 1 {
                    return 0.0;
                }
                let m = i.min(j) as i64;
                let c = (m + 1).div_euclid(2) * (1 - 2 * (1 - m).div_euclid(2));
                if c == 0 {
                    return 0.0;
                }
                let s = ((2 * i + 1) * (2 * j + 1)) as u128;
                let c = c as u128;
                if i == j {
                    // (2i+1)·c/3 with c = i(i+1)/2 is the integer Σ k², k ≤ i.
                    return ((s.isqrt_exact() * c) / 3) as f64;
                }
                sqrt_ratio_nearest(s * c * c, 9)
            }
        }
    }
}

trait ExactIsqrt {
    fn isqrt_exact(self) -> u128;
}

impl ExactIsqrt for u128 {
    /// Square root of a perfect square.
    fn isqrt_exact(self) -> u128 {
        let r = (self as f64).sqrt().round() as u128;
        debug_assert_eq!(r * r, self);
        r
    }
}

/// `sqrt(num / den)` rounded to nearest, for `num < 2^53`.
///
/// One Newton correction with an FMA residual removes the double rounding of
/// the naive `sqrt(num) / sqrt(den)`.
fn sqrt_ratio_nearest(num: u128, den: u128) -> f64 {
    let x = num as f64;
    let d = den as f64;
    if num >= (1u128 << 53) {
        return (x / d).sqrt();
    }
    let v = (x / d).sqrt();
    // residual num - den·v² evaluated with an exact product v² = p + e
    let p = v * v;
    let e = v.mul_add(v, -p);
    let r = (-d).mul_add(p, x) - d * e;
    v + r / (2.0 * d * v)
}
