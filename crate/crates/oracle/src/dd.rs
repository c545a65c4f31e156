//! Double-double arithmetic (~106-bit significand) and an extended-precision
//! rank-removal oracle built on it.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
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

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

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
        // one Newton step from the f64 estimate doubles the precision
        let x = Dd::new(self.hi.sqrt());
        let half = Dd::new(0.5);
        half * (x + self / x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
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
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

impl PartialEq for Dd {
    fn eq(&self, o: &Dd) -> bool {
        self.hi == o.hi && self.lo == o.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, o: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            other => other,
        }
    }
}

/// Cyclic Jacobi in double-double. Eigenvalues descending, vectors as columns.
pub fn jacobi_eigen_dd(a: &[Vec<Dd>]) -> (Vec<Dd>, Vec<Vec<Dd>>) {
    let n = a.len();
    let mut m = a.to_vec();
    let mut v = vec![vec![Dd::ZERO; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = Dd::ONE;
    }
    let one = Dd::ONE;
    let two = Dd::new(2.0);
    for _sweep in 0..60 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = m[i][j].to_f64();
                if i == j {
                    diag += x * x;
                } else {
                    off += x * x;
                }
            }
        }
        if off <= 1e-64 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].to_f64() == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (two * m[p][q]);
                let root = (theta * theta + one).sqrt();
                let t = if theta.to_f64() >= 0.0 {
                    one / (theta + root)
                } else {
                    -(one / (-theta + root))
                };
                let c = one / (t * t + one).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].partial_cmp(&m[x][x]).unwrap());
    let vals = order.iter().map(|&i| m[i][i]).collect();
    let vecs = (0..n)
        .map(|r| order.iter().map(|&c| v[r][c]).collect())
        .collect();
    (vals, vecs)
}

/// `H − Σ_{i<k} s_i u_i v_iᵀ` evaluated in double-double via the right
/// singular vectors of `H` (eigenvectors of `HᵀH`), rounded back to f64.
pub fn remove_top_components(h: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let cols = h[0].len();
    let hd: Vec<Vec<Dd>> = h
        .iter()
        .map(|r| r.iter().map(|&x| Dd::new(x)).collect())
        .collect();
    let mut g = vec![vec![Dd::ZERO; cols]; cols];
    for row in &hd {
        for i in 0..cols {
            for j in 0..cols {
                g[i][j] = g[i][j] + row[i] * row[j];
            }
        }
    }
    let (_, vecs) = jacobi_eigen_dd(&g);
    hd.iter()
        .map(|row| {
            let mut out = row.clone();
            for c in 0..k {
                let mut proj = Dd::ZERO;
                for j in 0..cols {
                    proj = proj + row[j] * vecs[j][c];
                }
                for j in 0..cols {
                    out[j] = out[j] - proj * vecs[j][c];
                }
            }
            out.into_iter().map(Dd::to_f64).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_bits_below_f64() {
        let a = Dd::new(1.0) + Dd::new(1e-20);
        let b = a - Dd::new(1.0);
        assert!((b.to_f64() - 1e-20).abs() < 1e-35);
    }

    #[test]
    fn sqrt_and_div() {
        let two = Dd::new(2.0);
        let r = two.sqrt();
        let back = r * r - two;
        assert!(back.to_f64().abs() < 1e-30);
        let q = Dd::new(1.0) / Dd::new(3.0);
        assert!((q * Dd::new(3.0) - Dd::ONE).to_f64().abs() < 1e-30);
    }
}
