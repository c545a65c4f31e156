use ndarray::Array2;

use super::FeatureError;
use crate::preprocess::StreamMatrix;

/// Grayscale image in `[0, 1]`, indexed `[row, column]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelImage {
    pub pixels: Array2<f64>,
    /// Tx-Rx pair of the first stream the image was rendered from.
    pub source_pair: usize,
}

impl ChannelImage {
    pub fn height(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn width(&self) -> usize {
        self.pixels.ncols()
    }

    /// 8-bit samples, row-major.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect()
    }

    /// Binary (P5) PGM encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width(), self.height()).into_bytes();
        out.extend(self.to_gray8());
        out
    }
}

pub const FLAT_SPAN: f64 = 1e-9;

/// Renders `m` with streams along the vertical axis and time along the
/// horizontal one, min-max normalized and resized to `out_h × out_w`.
/// A matrix whose span is below [`FLAT_SPAN`] renders as uniform 0.5, so
/// rounding residue of a flat signal is not stretched to full contrast.
pub fn to_image(m: &StreamMatrix, out_h: usize, out_w: usize) -> Result<ChannelImage, FeatureError> {
    if m.values.is_empty() {
        return Err(FeatureError::EmptyMatrix);
    }
    if out_h == 0 || out_w == 0 {
        return Err(FeatureError::InvalidSize(out_h, out_w));
    }
    let (lo, hi) = m.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(FeatureError::NonFinite);
    }
    let source_pair = m.stream_map.first().map_or(0, |s| s.pair);
    let span = hi - lo;
    if span < FLAT_SPAN {
        return Ok(ChannelImage { pixels: Array2::from_elem((out_h, out_w), 0.5), source_pair });
    }
    let norm = m.values.t().mapv(|v| ((v - lo) / span).clamp(0.0, 1.0));
    Ok(ChannelImage {
        pixels: resize_bilinear(&norm, out_h, out_w),
        source_pair,
    })
}

/// Separable bilinear resize on pixel centers. When shrinking, the triangle
/// kernel is widened by the scale factor so every source pixel contributes
/// (area-weighted antialiasing); enlarging is plain bilinear interpolation.
pub fn resize_bilinear(src: &Array2<f64>, out_h: usize, out_w: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    if (h, w) == (out_h, out_w) {
        return src.clone();
    }
    let wy = weights(h, out_h);
    let wx = weights(w, out_w);
    let mut tmp = Array2::<f64>::zeros((h, out_w));
    for r in 0..h {
        for (c, taps) in wx.iter().enumerate() {
            tmp[[r, c]] = taps.iter().map(|&(j, wt)| src[[r, j]] * wt).sum();
        }
    }
    let mut out = Array2::zeros((out_h, out_w));
    for (r, taps) in wy.iter().enumerate() {
        for c in 0..out_w {
            out[[r, c]] = taps.iter().map(|&(j, wt)| tmp[[j, c]] * wt).sum();
        }
    }
    out
}

fn weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    let support = scale.max(1.0);
    (0..n_out)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            let lo = (center - support).floor().max(0.0) as usize;
            let hi = ((center + support).ceil() as usize).min(n_in);
            let mut taps: Vec<(usize, f64)> = (lo..hi)
                .map(|j| (j, (1.0 - ((j as f64 + 0.5 - center) / support).abs()).max(0.0)))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            if taps.is_empty() {
                let j = (center.floor() as usize).min(n_in - 1);
                taps.push((j, 1.0));
            }
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= total);
            taps
        })
        .collect()
}
