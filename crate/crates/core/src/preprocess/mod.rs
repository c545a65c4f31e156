//! From raw CSI frames to a clean amplitude [`StreamMatrix`].
//!
//! `interpolate` puts `|H|` on a uniform grid, `lowpass` removes
//! high-frequency noise with a zero-phase Butterworth filter, and
//! `normalize` subtracts a centered moving-window mean from every stream.

mod butterworth;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::model::CsiTrace;

pub use butterworth::{Biquad, ButterworthLowpass};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("timestamps not strictly increasing at frame {0}")]
    NonIncreasingTimestamps(usize),
    #[error("invalid rate {0}")]
    InvalidRate(f64),
    #[error("cutoff {cutoff} Hz is not below Nyquist ({nyquist} Hz)")]
    CutoffAboveNyquist { cutoff: f64, nyquist: f64 },
    #[error("invalid filter order {0}")]
    InvalidOrder(usize),
    #[error("invalid window {0} s")]
    InvalidWindow(f64),
    #[error("non-finite value in stream matrix")]
    NonFinite,
}

/// Which Tx-Rx pair and subcarrier a stream column came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamId {
    pub pair: usize,
    pub subcarrier: usize,
}

/// Real amplitude matrix `[time, stream]` at a fixed sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamMatrix {
    pub values: Array2<f64>,
    pub rate: f64,
    pub stream_map: Vec<StreamId>,
}

impl StreamMatrix {
    pub fn samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn streams(&self) -> usize {
        self.values.ncols()
    }

    /// Distinct pairs in column order.
    pub fn pairs(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for s in &self.stream_map {
            if !out.contains(&s.pair) {
                out.push(s.pair);
            }
        }
        out
    }

    /// Columns belonging to `pair`.
    pub fn pair_columns(&self, pair: usize) -> Vec<usize> {
        self.stream_map
            .iter()
            .enumerate()
            .filter(|(_, s)| s.pair == pair)
            .map(|(i, _)| i)
            .collect()
    }

    /// The sub-matrix of one pair's streams.
    pub fn pair_matrix(&self, pair: usize) -> StreamMatrix {
        let cols = self.pair_columns(pair);
        StreamMatrix {
            values: self.values.select(Axis(1), &cols),
            rate: self.rate,
            stream_map: cols.iter().map(|&c| self.stream_map[c]).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Flattened pair-major stream map for `pairs × subcarriers`.
pub fn stream_map(pairs: usize, subcarriers: usize) -> Vec<StreamId> {
    (0..pairs)
        .flat_map(|pair| (0..subcarriers).map(move |subcarrier| StreamId { pair, subcarrier }))
        .collect()
}

/// Raw amplitudes, one row per frame, no resampling.
pub fn amplitudes(trace: &CsiTrace) -> StreamMatrix {
    let (np, ns) = (trace.pairs(), trace.subcarriers());
    let mut values = Array2::zeros((trace.len(), np * ns));
    for (t, f) in trace.frames.iter().enumerate() {
        for (j, g) in f.gains.iter().enumerate() {
            values[[t, j]] = g.norm();
        }
    }
    StreamMatrix { values, rate: trace.meta.nominal_rate, stream_map: stream_map(np, ns) }
}

/// Resamples `|H|` onto a uniform grid from the first to the last timestamp
/// by per-stream linear interpolation.
pub fn interpolate(trace: &CsiTrace, target_rate: f64) -> Result<StreamMatrix, PreprocessError> {
    if !(target_rate.is_finite() && target_rate > 0.0) {
        return Err(PreprocessError::InvalidRate(target_rate));
    }
    let frames = &trace.frames;
    if frames.len() < 2 {
        return Err(PreprocessError::TooFewFrames(frames.len()));
    }
    for (i, w) in frames.windows(2).enumerate() {
        if !(w[1].timestamp > w[0].timestamp) {
            return Err(PreprocessError::NonIncreasingTimestamps(i + 1));
        }
    }
    let t0 = frames[0].timestamp;
    let span = frames[frames.len() - 1].timestamp - t0;
    let n = (span * target_rate * (1.0 + 1e-12)).floor() as usize + 1;
    let (np, ns) = (trace.pairs(), trace.subcarriers());
    let d = np * ns;
    let mut values = Array2::zeros((n, d));
    let mut seg = 0;
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    let fill = |buf: &mut [f64], k: usize| {
        for (b, g) in buf.iter_mut().zip(frames[k].gains.iter()) {
            *b = g.norm();
        }
    };
    fill(&mut lo, 0);
    fill(&mut hi, 1);
    for i in 0..n {
        let t = t0 + i as f64 / target_rate;
        while seg + 2 < frames.len() && t > frames[seg + 1].timestamp {
            seg += 1;
            std::mem::swap(&mut lo, &mut hi);
            fill(&mut hi, seg + 1);
        }
        let (ta, tb) = (frames[seg].timestamp, frames[seg + 1].timestamp);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let mut row = values.row_mut(i);
        for j in 0..d {
            row[j] = lo[j] + (hi[j] - lo[j]) * w;
        }
    }
    Ok(StreamMatrix { values, rate: target_rate, stream_map: stream_map(np, ns) })
}

/// Zero-phase Butterworth low-pass of every stream.
pub fn lowpass(m: &StreamMatrix, order: usize, cutoff: f64) -> Result<StreamMatrix, PreprocessError> {
    let filter = ButterworthLowpass::design(order, cutoff, m.rate)?;
    let mut out = m.clone();
    let mut buf = Vec::with_capacity(m.samples());
    for mut col in out.values.columns_mut() {
        buf.clear();
        buf.extend(col.iter().copied());
        let y = filter.filtfilt(&buf);
        for (c, v) in col.iter_mut().zip(y) {
            *c = v;
        }
    }
    Ok(out)
}

/// Window length in samples for a window of `seconds` at `rate`.
pub fn window_samples(seconds: f64, rate: f64) -> usize {
    (seconds * rate).round() as usize
}

/// Subtracts from each sample the mean of a centered window of
/// `round(window × rate)` samples, truncated at the ends.
///
/// For an even window `W` the window covers `[t − W/2, t + W/2 − 1]`.
pub fn normalize(m: &StreamMatrix, window: f64) -> Result<StreamMatrix, PreprocessError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(PreprocessError::InvalidWindow(window));
    }
    let w = window_samples(window, m.rate);
    if w == 0 {
        return Err(PreprocessError::InvalidWindow(window));
    }
    let n = m.samples();
    let half = w / 2;
    let mut out = m.clone();
    let mut prefix = vec![0.0; n + 1];
    for mut col in out.values.columns_mut() {
        for (i, v) in col.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        for (t, v) in col.iter_mut().enumerate() {
            let lo = t.saturating_sub(half);
            let hi = (t + w - half).min(n);
            *v -= (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        }
    }
    Ok(out)
}

/// Stage settings for [`run`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub target_rate: f64,
    pub lowpass_order: usize,
    pub cutoff_hz: f64,
    /// Moving-window width in seconds.
    pub window: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { target_rate: 1000.0, lowpass_order: 5, cutoff_hz: 50.0, window: 0.3 }
    }
}

/// interpolate → lowpass → normalize.
pub fn run(trace: &CsiTrace, cfg: &PreprocessConfig) -> Result<StreamMatrix, PreprocessError> {
    let m = interpolate(trace, cfg.target_rate)?;
    let m = lowpass(&m, cfg.lowpass_order, cfg.cutoff_hz)?;
    let m = normalize(&m, cfg.window)?;
    if !m.is_finite() {
        return Err(PreprocessError::NonFinite);
    }
    Ok(m)
}
