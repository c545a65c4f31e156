//! Background removal by SVD.
//!
//! The stream matrix `H` (time × streams) is factored as `U S Vᵀ`; the
//! leading components carry the location-dependent static background and
//! are subtracted, leaving `Σ_{i>k} s_i u_i v_iᵀ`.

mod svd;

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::preprocess::StreamMatrix;

pub use svd::{svd, svd_right, Svd};

#[derive(Debug, thiserror::Error)]
pub enum DenoiseError {
    #[error("matrix is {rows}x{cols}; need at least one row and column")]
    Empty { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SvdScope {
    /// One SVD per Tx-Rx pair on its `t × 30` block.
    PerPair30,
    /// One SVD on all `t × 120` streams.
    Stacked120,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SvdMode {
    pub scope: SvdScope,
    /// Number of leading components removed.
    #[serde(default = "one")]
    pub remove: usize,
}

fn one() -> usize {
    1
}

impl SvdMode {
    pub fn per_pair() -> Self {
        SvdMode { scope: SvdScope::PerPair30, remove: 1 }
    }

    pub fn stacked() -> Self {
        SvdMode { scope: SvdScope::Stacked120, remove: 1 }
    }
}

/// `H − Σ_{i<k} (H v_i) v_iᵀ`, which equals dropping the `k` largest
/// singular triplets.
pub fn remove_top_components(h: &Array2<f64>, k: usize) -> Result<Array2<f64>, DenoiseError> {
    let (_, v) = svd_right(h)?;
    let mut out = h.clone();
    for i in 0..k.min(v.ncols()) {
        let vi = v.column(i);
        let hv = h.dot(&vi);
        for (mut row, &a) in out.rows_mut().into_iter().zip(hv.iter()) {
            row.scaled_add(-a, &vi);
        }
    }
    Ok(out)
}

/// Removes the `mode.remove` dominant components, per pair or stacked.
pub fn remove_background(m: &StreamMatrix, mode: SvdMode) -> Result<StreamMatrix, DenoiseError> {
    match mode.scope {
        SvdScope::Stacked120 => {
            let values = remove_top_components(&m.values, mode.remove)?;
            Ok(StreamMatrix { values, ..m.clone() })
        }
        SvdScope::PerPair30 => {
            let groups: Vec<Vec<usize>> = m.pairs().into_iter().map(|p| m.pair_columns(p)).collect();
            let blocks = groups
                .par_iter()
                .map(|cols| remove_top_components(&m.values.select(Axis(1), cols), mode.remove))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = m.clone();
            for (cols, block) in groups.iter().zip(blocks) {
                for (k, &c) in cols.iter().enumerate() {
                    out.values.column_mut(c).assign(&block.column(k));
                }
            }
            Ok(out)
        }
    }
}

/// Frobenius norm.
pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}
