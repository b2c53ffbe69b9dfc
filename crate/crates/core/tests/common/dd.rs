//! Double-double arithmetic (about 106 significant bits) for quadrature
//! oracles whose f64 rounding error would exceed the comparison tolerance.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn from_u64(x: u64) -> Self {
        let hi = x as f64;
        let lo = (x as i128 - hi as i128) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Nearest f64.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        // one Newton step on the f64 root
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Dd { hi: p, lo: e }).to_f64();
        let (hi, lo) = quick_two_sum(x, r / (2.0 * x));
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// One-dimensional orthonormal family described by its three-term
/// recurrence `y φ_n = b_{n+1} φ_{n+1} + b_n φ_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthonormal {
    /// Uniform density on `[-√3, √3]`.
    Legendre,
    /// Standard normal density.
    Hermite,
}

impl Orthonormal {
    fn b(self, n: usize) -> Dd {
        let n64 = n as u64;
        match self {
            // √3 · n / √(4n² − 1)
            Orthonormal::Legendre => {
                Dd::from_u64(n64) * (Dd::from_u64(3) / Dd::from_u64(4 * n64 * n64 - 1)).sqrt()
            }
            Orthonormal::Hermite => Dd::from_u64(n64).sqrt(),
        }
    }

    /// `(φ_0..φ_deg, φ'_0..φ'_deg)` at `y`.
    pub fn eval(self, deg: usize, y: Dd) -> (Vec<Dd>, Vec<Dd>) {
        let mut v = vec![Dd::ZERO; deg + 1];
        let mut d = vec![Dd::ZERO; deg + 1];
        v[0] = Dd::ONE;
        if deg >= 1 {
            let b1 = self.b(1);
            v[1] = y / b1;
            d[1] = Dd::ONE / b1;
        }
        for n in 1..deg {
            let (bn, bn1) = (self.b(n), self.b(n + 1));
            v[n + 1] = (y * v[n] - bn * v[n - 1]) / bn1;
            d[n + 1] = (v[n] + y * d[n] - bn * d[n - 1]) / bn1;
        }
        (v, d)
    }

    /// `points`-node Gauss rule: f64 starting nodes polished by Newton in
    /// double-double, Christoffel weights `1 / Σ φ_n²`.
    pub fn gauss(self, points: usize, start: &[f64]) -> Vec<(Dd, Dd)> {
        assert_eq!(start.len(), points);
        start
            .iter()
            .map(|&x0| {
                let mut x = Dd::from_f64(x0);
                for _ in 0..4 {
                    let (v, d) = self.eval(points, x);
                    x = x - v[points] / d[points];
                }
                let (v, _) = self.eval(points - 1, x);
                let s = v.iter().fold(Dd::ZERO, |acc, &p| acc + p * p);
                (x, Dd::ONE / s)
            })
            .collect()
    }
}

/// Gram and derivative-Gram tables `∫φ_iφ_j ρ`, `∫φ_i'φ_j' ρ`,
/// `i, j ≤ deg`, by double-double Gauss quadrature, rounded to f64.
pub fn gram_tables(family: Orthonormal, deg: usize, start: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let points = deg + 1;
    let rule = family.gauss(points, start);
    let evals: Vec<(Vec<Dd>, Vec<Dd>)> = rule.iter().map(|&(x, _)| family.eval(deg, x)).collect();
    let m = deg + 1;
    let mut g = vec![0.0; m * m];
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let mut sg = Dd::ZERO;
            let mut sd = Dd::ZERO;
            for ((_, w), (v, dv)) in rule.iter().zip(&evals) {
                sg = sg + *w * v[i] * v[j];
                sd = sd + *w * dv[i] * dv[j];
            }
            g[i * m + j] = sg.to_f64();
            g[j * m + i] = sg.to_f64();
            d[i * m + j] = sd.to_f64();
            d[j * m + i] = sd.to_f64();
        }
    }
    (g, d)
}
