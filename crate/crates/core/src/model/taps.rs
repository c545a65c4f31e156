use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{CsiFrame, ModelError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap {
    pub index: usize,
    pub magnitude: f64,
}

/// Time-domain view of one pair's subcarrier vector: magnitudes of the
/// `1/S`-normalized inverse DFT. Tap 0 collects the shortest paths.
pub fn tap_profile(frame: &CsiFrame, pair: usize) -> Result<Vec<Tap>, ModelError> {
    if pair >= frame.pairs() {
        return Err(ModelError::PairOutOfRange { index: pair, pairs: frame.pairs() });
    }
    let n = frame.subcarriers();
    let mut buf: Vec<Complex64> = frame.gains.row(pair).to_vec();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    Ok(buf
        .iter()
        .enumerate()
        .map(|(index, c)| Tap { index, magnitude: c.norm() / n as f64 })
        .collect())
}
