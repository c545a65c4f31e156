use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ChannelImage, FeatureError};

/// 4×4 cells × 8 orientation bins.
pub const SIFT_DIM: usize = 128;

const CELLS: usize = 4;
const BINS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiftParams {
    /// Grid step between patch corners, pixels.
    pub stride: usize,
    /// Patch side, pixels; a multiple of 4.
    pub patch: usize,
    /// Entries are clamped to this after the first L2 normalization.
    pub clamp: f64,
}

impl Default for SiftParams {
    fn default() -> Self {
        SiftParams { stride: 8, patch: 16, clamp: 0.2 }
    }
}

/// Dense SIFT on a regular grid, row-major over patch positions.
///
/// Gradients are central differences (one-sided at the border). Each pixel
/// votes its Gaussian-weighted magnitude into its cell, split linearly
/// between the two nearest orientation bins. Patches without gradient give
/// zero descriptors.
pub fn sift_descriptors(img: &ChannelImage, params: &SiftParams) -> Result<Vec<Vec<f64>>, FeatureError> {
    let (h, w) = img.pixels.dim();
    let min = 2 * params.patch;
    if h < min || w < min {
        return Err(FeatureError::ImageTooSmall { height: h, width: w, min });
    }
    if params.patch % CELLS != 0 || params.stride == 0 {
        return Err(FeatureError::InvalidSize(params.patch, params.stride));
    }
    let (mag, ori) = gradients(&img.pixels);
    let p = params.patch;
    let cell = p / CELLS;
    let sigma = p as f64 / 2.0;
    let c0 = (p as f64 - 1.0) / 2.0;
    let weight = Array2::from_shape_fn((p, p), |(i, j)| {
        let (dy, dx) = (i as f64 - c0, j as f64 - c0);
        (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp()
    });
    let mut out = Vec::new();
    for y0 in (0..=h - p).step_by(params.stride) {
        for x0 in (0..=w - p).step_by(params.stride) {
            let mut d = vec![0.0; SIFT_DIM];
            for i in 0..p {
                for j in 0..p {
                    let m = mag[[y0 + i, x0 + j]] * weight[[i, j]];
                    if m == 0.0 {
                        continue;
                    }
                    let b = ori[[y0 + i, x0 + j]] / (2.0 * PI) * BINS as f64;
                    let lo = b.floor();
                    let frac = b - lo;
                    let lo = lo as usize % BINS;
                    let base = ((i / cell) * CELLS + j / cell) * BINS;
                    d[base + lo] += m * (1.0 - frac);
                    d[base + (lo + 1) % BINS] += m * frac;
                }
            }
            normalize(&mut d, params.clamp);
            out.push(d);
        }
    }
    Ok(out)
}

fn normalize(d: &mut [f64], clamp: f64) {
    let unit = |d: &mut [f64]| {
        let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-12 {
            d.iter_mut().for_each(|v| *v /= n);
            true
        } else {
            d.iter_mut().for_each(|v| *v = 0.0);
            false
        }
    };
    if unit(d) {
        d.iter_mut().for_each(|v| *v = v.min(clamp));
        unit(d);
    }
}

/// Magnitude and orientation in `[0, 2π)`; `x` grows rightwards, `y` downwards.
fn gradients(img: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (h, w) = img.dim();
    let mut mag = Array2::zeros((h, w));
    let mut ori = Array2::zeros((h, w));
    for i in 0..h {
        for j in 0..w {
            let dx = diff(|k| img[[i, k]], j, w);
            let dy = diff(|k| img[[k, j]], i, h);
            mag[[i, j]] = (dx * dx + dy * dy).sqrt();
            ori[[i, j]] = dy.atan2(dx).rem_euclid(2.0 * PI);
        }
    }
    (mag, ori)
}

fn diff(at: impl Fn(usize) -> f64, i: usize, n: usize) -> f64 {
    if n < 2 {
        0.0
    } else if i == 0 {
        at(1) - at(0)
    } else if i == n - 1 {
        at(n - 1) - at(n - 2)
    } else {
        (at(i + 1) - at(i - 1)) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(pixels: Array2<f64>) -> ChannelImage {
        ChannelImage { pixels, source_pair: 0 }
    }

    #[test]
    fn grid_layout_and_dimension() {
        let img = image(Array2::from_shape_fn((54, 72), |(i, j)| ((i * j) % 7) as f64 / 7.0));
        let d = sift_descriptors(&img, &SiftParams::default()).unwrap();
        assert_eq!(d.len(), 5 * 8);
        assert!(d.iter().all(|v| v.len() == SIFT_DIM));
    }

    #[test]
    fn constant_image_gives_zero_descriptors() {
        let d = sift_descriptors(&image(Array2::from_elem((32, 40), 0.3)), &SiftParams::default()).unwrap();
        assert!(d.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic() {
        let img = image(Array2::from_shape_fn((40, 48), |(i, j)| ((i * 31 + j * 17) % 23) as f64 / 23.0));
        let a = sift_descriptors(&img, &SiftParams::default()).unwrap();
        let b = sift_descriptors(&img.clone(), &SiftParams::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn descriptors_are_non_negative_unit_vectors() {
        let img = image(Array2::from_shape_fn((40, 48), |(i, j)| ((i * 31 + j * 17) % 23) as f64 / 23.0));
        for d in sift_descriptors(&img, &SiftParams::default()).unwrap() {
            let n: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
            assert!(d.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn clamping_limits_a_single_dominant_bin() {
        let mut d = vec![0.0; SIFT_DIM];
        d[0] = 10.0;
        d[1] = 1.0;
        normalize(&mut d, 0.2);
        // after clamping both entries are 0.2 and 0.0995; renormalized they stay in that ratio
        let ratio = d[0] / d[1];
        assert!((ratio - 0.2 / (1.0 / 101f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn vertical_step_edge_votes_for_horizontal_gradient() {
        // dark left half, bright right half: gradient points along +x (bin 0)
        let img = image(Array2::from_shape_fn((32, 48), |(_, j)| if j >= 20 { 1.0 } else { 0.0 }));
        let d = sift_descriptors(&img, &SiftParams::default()).unwrap();
        // patches at x0 = 8 and 16 contain the edge at column 19/20
        for (k, desc) in d.iter().enumerate() {
            let x0 = (k % 5) * 8;
            if x0 + 16 <= 19 || x0 > 20 {
                assert!(desc.iter().all(|&v| v == 0.0));
                continue;
            }
            let mut totals = [0.0; BINS];
            for (i, v) in desc.iter().enumerate() {
                totals[i % BINS] += v;
            }
            let arg = (0..BINS).max_by(|&a, &b| totals[a].total_cmp(&totals[b])).unwrap();
            assert_eq!(arg, 0);
        }
    }

    #[test]
    fn horizontal_edge_votes_downwards() {
        let img = image(Array2::from_shape_fn((32, 32), |(i, _)| if i >= 12 { 1.0 } else { 0.0 }));
        let d = sift_descriptors(&img, &SiftParams::default()).unwrap();
        let mut totals = [0.0; BINS];
        for (i, v) in d[0].iter().enumerate() {
            totals[i % BINS] += v;
        }
        let arg = (0..BINS).max_by(|&a, &b| totals[a].total_cmp(&totals[b])).unwrap();
        // +y is image-down, atan2 gives π/2 → bin 2
        assert_eq!(arg, 2);
    }

    #[test]
    fn too_small_image_is_rejected() {
        assert!(matches!(
            sift_descriptors(&image(Array2::zeros((31, 64))), &SiftParams::default()),
            Err(FeatureError::ImageTooSmall { height: 31, width: 64, min: 32 })
        ));
    }
}
