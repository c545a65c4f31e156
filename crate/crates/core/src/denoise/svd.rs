use ndarray::Array2;

use super::DenoiseError;

/// Economy SVD `H = U·diag(s)·Vᵀ` of a `t × d` matrix; `r = min(t, d)`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `t × r`, orthonormal columns.
    pub u: Array2<f64>,
    /// Length `r`, non-negative, non-increasing.
    pub s: Vec<f64>,
    /// `d × r`, orthonormal columns.
    pub v: Array2<f64>,
}

impl Svd {
    /// `Σ_{i ∈ keep} s_i u_i v_iᵀ`.
    pub fn reconstruct_with(&self, keep: impl Fn(usize) -> bool) -> Array2<f64> {
        let (t, d) = (self.u.nrows(), self.v.nrows());
        let mut out = Array2::zeros((t, d));
        for k in (0..self.s.len()).filter(|&k| keep(k)) {
            let sk = self.s[k];
            for i in 0..t {
                let ui = self.u[[i, k]] * sk;
                if ui == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[[i, j]] += ui * self.v[[j, k]];
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        self.reconstruct_with(|_| true)
    }
}

/// Full economy SVD.
pub fn svd(h: &Array2<f64>) -> Result<Svd, DenoiseError> {
    check(h)?;
    let (t, d) = h.dim();
    if t < d {
        let Svd { u, s, v } = svd(&h.t().to_owned())?;
        return Ok(Svd { u: v, s, v: u });
    }
    let cols = columns(h);
    let (reflectors, r) = householder_qr(cols, t, d);
    let (s, v, rv) = jacobi(r, d);
    // U = Q · (R V diag(1/s)), completing null directions to an orthonormal set
    let mut small: Vec<Vec<f64>> = Vec::with_capacity(d);
    let tol = s.first().copied().unwrap_or(0.0) * f64::EPSILON * d as f64;
    for k in 0..d {
        if s[k] > tol && s[k] > 0.0 {
            small.push(rv[k].iter().map(|x| x / s[k]).collect());
        } else {
            small.push(complete(&small, d));
        }
    }
    let mut u = Array2::zeros((t, d));
    for (k, c) in small.into_iter().enumerate() {
        let mut full = c;
        full.resize(t, 0.0);
        apply_q(&reflectors, &mut full);
        for i in 0..t {
            u[[i, k]] = full[i];
        }
    }
    Ok(Svd { u, s, v: to_array(&v, d) })
}

/// Singular values and right singular vectors (`d × r`) only.
pub fn svd_right(h: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>), DenoiseError> {
    check(h)?;
    let (t, d) = h.dim();
    if t < d {
        let full = svd(h)?;
        return Ok((full.s, full.v));
    }
    let (_, r) = householder_qr(columns(h), t, d);
    let (s, v, _) = jacobi(r, d);
    Ok((s, to_array(&v, d)))
}

fn check(h: &Array2<f64>) -> Result<(), DenoiseError> {
    let (t, d) = h.dim();
    if t == 0 || d == 0 {
        return Err(DenoiseError::Empty { rows: t, cols: d });
    }
    if !h.iter().all(|x| x.is_finite()) {
        return Err(DenoiseError::NonFinite);
    }
    Ok(())
}

fn columns(h: &Array2<f64>) -> Vec<Vec<f64>> {
    h.columns().into_iter().map(|c| c.to_vec()).collect()
}

fn to_array(cols: &[Vec<f64>], rows: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols.len()), |(i, k)| cols[k][i])
}

// Four independent accumulators let the compiler vectorize.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a4, b4) = (a[..n].chunks_exact(4), b[..n].chunks_exact(4));
    let tail: f64 = a4.remainder().iter().zip(b4.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in a4.zip(b4) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Householder vectors (`v_j` acts on rows `j..t`, unit norm or empty) and
/// the `d × d` triangle R stored by columns.
fn householder_qr(mut a: Vec<Vec<f64>>, t: usize, d: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut reflectors = Vec::with_capacity(d);
    for j in 0..d {
        let x = &a[j][j..t];
        let norm = dot(x, x).sqrt();
        if norm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vn = dot(&v, &v).sqrt();
        if vn == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for e in v.iter_mut() {
            *e /= vn;
        }
        for col in a.iter_mut().skip(j) {
            let seg = &mut col[j..t];
            let p = 2.0 * dot(&v, seg);
            for (c, vi) in seg.iter_mut().zip(&v) {
                *c -= p * vi;
            }
        }
        reflectors.push(v);
    }
    let r = a
        .iter()
        .enumerate()
        .map(|(j, col)| (0..d).map(|i| if i <= j { col[i] } else { 0.0 }).collect())
        .collect();
    (reflectors, r)
}

/// `x ← Q x` for a length-`t` vector.
fn apply_q(reflectors: &[Vec<f64>], x: &mut [f64]) {
    for (j, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        let seg = &mut x[j..j + v.len()];
        let p = 2.0 * dot(v, seg);
        for (c, vi) in seg.iter_mut().zip(v) {
            *c -= p * vi;
        }
    }
}

/// One-sided Jacobi on the columns of `a` (`d` columns of length `d`).
/// Returns sorted singular values, V by columns, and the matching columns of
/// `a·V`.
fn jacobi(mut a: Vec<Vec<f64>>, d: usize) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut v: Vec<Vec<f64>> = (0..d).map(|k| (0..d).map(|i| if i == k { 1.0 } else { 0.0 }).collect()).collect();
    let mut norms: Vec<f64> = a.iter().map(|c| dot(c, c)).collect();
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..d {
            for q in p + 1..d {
                let alpha = norms[p];
                let beta = norms[q];
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut a, p, q, c, s);
                rotate(&mut v, p, q, c, s);
                norms[p] = dot(&a[p], &a[p]);
                norms[q] = dot(&a[q], &a[q]);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    let sv: Vec<f64> = norms.iter().map(|n| n.sqrt()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]).then(i.cmp(&j)));
    let mut s = Vec::with_capacity(d);
    let mut vs = Vec::with_capacity(d);
    let mut avs = Vec::with_capacity(d);
    for &k in &order {
        let mut vk = v[k].clone();
        let mut ak = a[k].clone();
        // fix the sign: largest-magnitude entry of v positive
        let big = vk.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).map_or(0, |x| x.0);
        if vk[big] < 0.0 {
            vk.iter_mut().for_each(|x| *x = -*x);
            ak.iter_mut().for_each(|x| *x = -*x);
        }
        s.push(sv[k]);
        vs.push(vk);
        avs.push(ak);
    }
    (s, vs, avs)
}

fn rotate(m: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = m.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// A unit vector orthogonal to every vector in `basis`.
fn complete(basis: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut best = vec![0.0; d];
    let mut best_norm = -1.0;
    for e in 0..d {
        let mut x = vec![0.0; d];
        x[e] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(&x, b);
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= p * bi;
                }
            }
        }
        let n = dot(&x, &x).sqrt();
        if n > best_norm {
            best_norm = n;
            best = x;
        }
        if n > 0.5 {
            break;
        }
    }
    best.iter().map(|x| x / best_norm).collect()
}
