//! Slow, obviously-correct reference computations for tests.
//!
//! Nothing in here is shared with the production code paths: the routines
//! are written from their textbook definitions (direct DFT, cyclic Jacobi,
//! dense correlation, brute-force scans) so that they can serve as
//! independent oracles.

pub mod dd;

use std::f64::consts::PI;

/// Direct O(N²) DFT. `inverse` uses the `+j` kernel and the `1/N` factor.
pub fn dft(re: &[f64], im: &[f64], inverse: bool) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    assert_eq!(n, im.len());
    let sign = if inverse { 1.0 } else { -1.0 };
    // twiddle table indexed by (k*t) mod n keeps the O(N²) loop exact enough
    let tw: Vec<(f64, f64)> = (0..n)
        .map(|m| {
            let a = sign * 2.0 * PI * m as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect();
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        let (mut sr, mut si) = (0.0, 0.0);
        for t in 0..n {
            let (c, s) = tw[(k * t) % n];
            sr += re[t] * c - im[t] * s;
            si += re[t] * s + im[t] * c;
        }
        if inverse {
            sr /= n as f64;
            si /= n as f64;
        }
        out_re[k] = sr;
        out_im[k] = si;
    }
    (out_re, out_im)
}

/// One-sided power spectrum of a real series (mean removed), bins 0..=N/2.
pub fn power_spectrum(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let re: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let im = vec![0.0; n];
    let (fr, fi) = dft(&re, &im, false);
    (0..=n / 2).map(|k| fr[k] * fr[k] + fi[k] * fi[k]).collect()
}

/// Frequency (Hz) of the largest nonzero-frequency bin of `power_spectrum`.
pub fn dominant_frequency(x: &[f64], rate: f64) -> f64 {
    let p = power_spectrum(x);
    let k = (1..p.len())
        .max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap())
        .unwrap_or(0);
    k as f64 * rate / x.len() as f64
}

/// Cyclic Jacobi eigen-solver for a symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns (`vecs[row][col]`).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
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

/// Gram matrix `HᵀH` of a row-major `rows × cols` matrix.
pub fn gram(h: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = h.first().map_or(0, |r| r.len());
    let mut g = vec![vec![0.0; cols]; cols];
    for row in h {
        for i in 0..cols {
            for j in 0..cols {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// Singular values via the eigenvalues of `HᵀH` (or `HHᵀ` when wide).
pub fn singular_values_via_eigen(h: &[Vec<f64>]) -> Vec<f64> {
    let rows = h.len();
    let cols = h.first().map_or(0, |r| r.len());
    let g = if rows >= cols {
        gram(h)
    } else {
        let t: Vec<Vec<f64>> = (0..cols).map(|c| h.iter().map(|r| r[c]).collect()).collect();
        gram(&t)
    };
    let (vals, _) = jacobi_eigen(&g);
    vals.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Same-size 2-D correlation with a complex kernel and reflect padding,
/// returning the response magnitude. Straight nested loops.
pub fn correlate_magnitude(
    img: &[Vec<f64>],
    kernel_re: &[Vec<f64>],
    kernel_im: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let h = img.len() as isize;
    let w = img[0].len() as isize;
    let k = kernel_re.len() as isize;
    let r = k / 2;
    let reflect = |i: isize, n: isize| -> usize {
        let mut i = i;
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * (n - 1) - i;
        }
        i as usize
    };
    let mut out = vec![vec![0.0; w as usize]; h as usize];
    for y in 0..h {
        for x in 0..w {
            let (mut sr, mut si) = (0.0, 0.0);
            for ky in 0..k {
                for kx in 0..k {
                    let p = img[reflect(y + ky - r, h)][reflect(x + kx - r, w)];
                    sr += p * kernel_re[ky as usize][kx as usize];
                    si += p * kernel_im[ky as usize][kx as usize];
                }
            }
            out[y as usize][x as usize] = (sr * sr + si * si).sqrt();
        }
    }
    out
}

/// Centered moving mean with truncated edges, recomputed window by window.
pub fn moving_mean(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len() as isize;
    let half = (window / 2) as isize;
    (0..n)
        .map(|t| {
            let lo = (t - half).max(0);
            let hi = (t - half + window as isize - 1).min(n - 1);
            let mut s = 0.0;
            for i in lo..=hi {
                s += x[i as usize];
            }
            s / (hi - lo + 1) as f64
        })
        .collect()
}

/// Analytic magnitude of an order-`n` Butterworth low-pass after bilinear
/// transform with prewarping.
pub fn butterworth_magnitude(freq: f64, cutoff: f64, rate: f64, order: u32) -> f64 {
    let ratio = (PI * freq / rate).tan() / (PI * cutoff / rate).tan();
    1.0 / (1.0 + ratio.powi(2 * order as i32)).sqrt()
}

pub fn softmax(d: &[f64]) -> Vec<f64> {
    let m = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = d.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Index of the nearest centroid by exhaustive scan, lowest index on ties.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d: f64 = point.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// P(|X/n - p| > tol) for X ~ Binomial(n, p).
pub fn binomial_deviation_probability(n: u64, p: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        if ((k as f64 / n as f64) - p).abs() > tol {
            total += binomial_pmf(n, k, p);
        }
    }
    total
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let ln_choose = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

fn ln_factorial(n: u64) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Bilinear interpolation of a 2-D grid at fractional coordinates, with the
/// weights written out by hand.
pub fn bilinear_at(grid: &[Vec<f64>], y: f64, x: f64) -> f64 {
    let y0 = y.floor() as usize;
    let x0 = x.floor() as usize;
    let y1 = (y0 + 1).min(grid.len() - 1);
    let x1 = (x0 + 1).min(grid[0].len() - 1);
    let fy = y - y0 as f64;
    let fx = x - x0 as f64;
    grid[y0][x0] * (1.0 - fy) * (1.0 - fx)
        + grid[y0][x1] * (1.0 - fy) * fx
        + grid[y1][x0] * fy * (1.0 - fx)
        + grid[y1][x1] * fy * fx
}
